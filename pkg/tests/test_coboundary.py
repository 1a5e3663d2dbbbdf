from fractions import Fraction

import numpy as np
import pytest

from skewlab.base import RotationSystem, build_rokhlin_tower
from skewlab.coboundary import (
    CertificateError,
    build_coboundary,
    build_theta,
    certify,
    condition_a_family,
    default_tower_schedule,
    expanding_homeo,
    find_arc,
    lemma_la_path,
    tower_averages,
    verify_E_membership,
)
from skewlab.ergodicity import TestFunction, get_function, orbit_averages
from skewlab.skew import ConstantCocycle, RelativeProduct, load_cocycle, save_cocycle

GOLDEN = RotationSystem.golden()


@pytest.fixture(scope="module")
def theta():
    tower = build_rokhlin_tower(GOLDEN, 8, Fraction(1, 5))
    return build_theta(tower, GOLDEN, 8)


@pytest.fixture(scope="module")
def built():
    return build_coboundary(GOLDEN, "cos_diff", 0.25, 0.1)


# condition (A) -------------------------------------------------------------------


def test_condition_a_family_size_and_bound():
    fam = condition_a_family((0.3, 0.1), 0.1)
    assert fam.M == 40
    assert fam.verify(1000) <= 0.1


def test_family_homeos_send_complement_to_short_arcs():
    fam = condition_a_family((0.3, 0.1), 0.1)
    outside = np.linspace(0.401, 1.299, 200) % 1.0
    for j, h in enumerate(fam.homeos[:5], start=1):
        img = (h(outside) - float(fam.bad_start) - j / fam.M) % 1.0
        assert np.all((img <= 0.05 + 1e-12) | (img >= 1 - 1e-12))


def test_expanding_homeo_maps_arc_endpoints():
    g = expanding_homeo((0.9, 0.3), 0.2)
    assert g(0.9) == pytest.approx(0.0, abs=1e-12)
    assert g(0.2) == pytest.approx(0.9)


def test_degenerate_families():
    whole = condition_a_family((0.0, 1.0), 0.1)
    assert whole.M == 1 and whole.verify() == 0.0
    vacuous = condition_a_family((0.2, 0.3), 1.0)
    assert vacuous.M == 1 and vacuous.verify() <= 1.0


def test_family_rejects_bad_eps():
    with pytest.raises(ValueError):
        condition_a_family((0.2, 0.3), 0.0)


# path ------------------------------------------------------------------------------


def test_path_violation_measure_below_gamma():
    path = lemma_la_path((0.3, 0.1), 0.05)
    assert path.verify(1000) <= 0.05


def test_path_sampled_matches_exact():
    path = lemma_la_path((0.6, 0.2), 0.1)
    ys = np.linspace(0.01, 0.99, 25)
    assert np.max(np.abs(path.sampled_violation(ys, 20_000) - path.violation_measure(ys))) < 2e-3


def test_path_holds_family_members():
    path = lemma_la_path((0.6, 0.2), 0.1)
    fam = condition_a_family((0.6, 0.2), 0.05)
    hold = 0.1 / (4 * path.M)
    y = np.linspace(0, 1, 101)
    for j in (1, 7, path.M):
        for t in ((j - 1) / path.M + hold, j / path.M - hold):
            np.testing.assert_allclose(path.apply(t, y), fam.homeos[j - 1](y), atol=1e-12)


def test_path_modulus_controls_distance():
    path = lemma_la_path((0.3, 0.1), 0.05)
    dt = 1e-3
    ys = np.linspace(0, 1, 500, endpoint=False)
    for t in (0.1, 0.37, 0.8):
        back = path.apply_inverse(t, path.apply(t + dt, ys))
        d = np.abs(back - ys)
        assert np.max(np.minimum(d, 1 - d)) <= path.modulus(dt) + 1e-12


# theta -------------------------------------------------------------------------------


def test_theta_tilde_affine_on_arcs(theta):
    T = theta.tower
    for (t, b), i in list(T.arc_index.items())[:4]:
        m = T.margins[t]
        start, length = T.arcs[i]
        for du in (0, 1, length // 3, length - 1):
            z = (start + du) % T.rotation.modulus
            expected = Fraction(T.arc_cdf[i] + du, theta.K)
            assert theta.level_value(T.locate(z)) == pytest.approx(float(expected), abs=1e-15)


def test_theta_tilde_pushforward_is_lebesgue(theta):
    assert theta.pushforward_distance() == 0.0


def test_theta_tilde_quantiles(theta):
    T = theta.tower
    rng = np.random.default_rng(0)
    lengths = np.array([length for _, length in T.arcs], dtype=float)
    picks = rng.choice(len(T.arcs), size=2000, p=lengths / lengths.sum())
    vals = []
    for i in picks:
        start, length = T.arcs[i]
        du = int(rng.random() * length)
        vals.append(theta.level_value(T.locate((start + du) % T.rotation.modulus)))
    vals = np.sort(vals)
    ecdf = np.arange(1, len(vals) + 1) / len(vals)
    assert np.max(np.abs(ecdf - vals)) < 0.05


def test_theta_steps_are_small(theta):
    zs = np.random.default_rng(1).random(400)
    assert theta.max_step(zs) <= 1.0 / theta.N + 1e-12


def test_theta_values_in_unit_interval(theta):
    vals = theta(np.random.default_rng(2).random(300))
    assert np.all((vals >= 0) & (vals <= 1))


def test_build_theta_checks_height():
    tower = build_rokhlin_tower(GOLDEN, 8, Fraction(1, 5))
    with pytest.raises(ValueError):
        build_theta(tower, GOLDEN, 9)


# builder -------------------------------------------------------------------------------


def test_builder_certificates(built):
    rep = built.report
    assert built.passed
    cert = rep["certificates"]
    assert cert["distance_to_identity"] < 0.1
    assert cert["integral_deviation"] < 0.25
    assert rep["gamma"] == 0.25 / 16


def test_certificates_reproduce_after_reload(built, tmp_path):
    path = save_cocycle(built.G, tmp_path / "g.json")
    again = certify(load_cocycle(path), "cos_diff", 0.25, 0.1)
    assert again == built.report["certificates"]


def test_constant_function_has_zero_deviation():
    res = build_coboundary(GOLDEN, "constant", 0.25, 0.1)
    assert res.report["certificates"]["integral_deviation"] == 0.0


def test_fiber_independent_function():
    res = build_coboundary(GOLDEN, "cos_z", 0.25, 0.1)
    assert res.report["certificates"]["integral_deviation"] < 1e-9
    assert res.report["V"][1] == 0.5


def test_oscillatory_function_rejected():
    wild = TestFunction("wild", lambda z, a, b: np.cos(2 * np.pi * 1000.3 * a), unit=True)
    with pytest.raises(CertificateError):
        find_arc(wild, 0.01, centres=4, max_depth=6)


def test_builder_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_coboundary(GOLDEN, "cos_diff", 0.0, 0.1)


# membership in E --------------------------------------------------------------------


def test_identity_is_far_from_E():
    rep = verify_E_membership(ConstantCocycle.identity(), "cos_diff", 0.1, GOLDEN, horizon_schedule=(100, 1000))
    # on a 16-point grid the spread of cos(2 pi (y1 - y2)) is at least 1 - grid error
    assert rep.best_deviation >= 0.5
    assert not rep.member


def test_constant_function_is_in_E_at_once():
    rep = verify_E_membership(ConstantCocycle.identity(), "constant", 0.1, GOLDEN, horizon_schedule=(1,))
    assert rep.deviations == (0.0,)
    assert rep.member


def test_tower_averages_match_direct_orbits(built):
    G = built.G
    starts = np.array([[0.1, 0.2, 0.7], [0.55, 0.4, 0.41], [0.9, 0.05, 0.95]])
    f = get_function("cos_diff")
    runs, approx = tower_averages(G, starts, [f], [999])
    direct, _ = orbit_averages(RelativeProduct(GOLDEN, G), starts, [f], [1000])
    assert np.max(np.abs(runs - direct)) <= approx[0] + 1e-9


def test_tower_averages_need_tower_coboundary():
    with pytest.raises(ValueError):
        tower_averages(ConstantCocycle.identity(), [[0.1, 0.2, 0.3]], ["cos_diff"], [10])


def test_default_tower_schedule(built):
    sched = default_tower_schedule(built.G)
    q = built.report["tower"]["q_k"]
    assert sched == (built.report["N"] ** 2, q, 4 * q, 16 * q, 64 * q)


@pytest.mark.slow
def test_built_cocycle_lies_in_E(built):
    rep = verify_E_membership(built.G, "cos_diff", 0.25, GOLDEN)
    assert rep.mode == "tower-runs"
    assert rep.member
