import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.base import RotationSystem
from skewlab.coboundary import lemma_la_path
from skewlab.ergodicity import (
    RELATIVE_FUNCTIONS,
    TestFunction,
    birkhoff_average,
    default_grid,
    empirical_measure,
    get_function,
    isomorphic_extension_test,
    orbit_averages,
    ue_gap,
)
from skewlab.skew import (
    CoboundaryCocycle,
    ConstantCocycle,
    CosineParameter,
    HomeoCocycle,
    RelativeProduct,
    SkewProduct,
)

GOLDEN = RotationSystem.golden()


def _smooth_coboundary():
    path = lemma_la_path((0.1, 0.4), 0.2)
    return CoboundaryCocycle(HomeoCocycle(CosineParameter(0.3), path), GOLDEN)


# Birkhoff averages -------------------------------------------------------------


def test_constant_average_is_exact():
    assert birkhoff_average(GOLDEN, 0.3, "constant", 12345) == 0.5
    sp = SkewProduct(GOLDEN, ConstantCocycle.rotation(0.2))
    assert birkhoff_average(sp, (0.3, 0.7), lambda z, y: np.full_like(z, 2.5), 777) == 2.5


def test_cosine_average_vanishes():
    assert abs(birkhoff_average(GOLDEN, 0.123, "cos_z", 10**6)) < 1e-4


def test_average_matches_integral():
    avg = birkhoff_average(GOLDEN, 0.0, lambda z: z**2, 10**5)
    assert abs(avg - 1.0 / 3.0) < 1e-3


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.integers(1, 3000))
def test_boundary_identity(x, n):
    # A_n f(Sx) - A_n f(x) = (f(S^n x) - f(x)) / n
    a = birkhoff_average(GOLDEN, x, "cos_z", n)
    b = birkhoff_average(GOLDEN, GOLDEN.step(x), "cos_z", n)
    assert abs(a - b) <= 2.0 / n + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.floats(-5, 5), st.integers(1, 2000))
def test_constant_shift_invariance(x, c, n):
    f = get_function("sin_z")
    shifted = TestFunction("shifted", lambda z, a, b: f(z) + c)
    assert abs(birkhoff_average(GOLDEN, x, shifted, n) - birkhoff_average(GOLDEN, x, f, n) - c) < 1e-12


def test_birkhoff_rejects_zero_horizon():
    with pytest.raises(ValueError):
        birkhoff_average(GOLDEN, 0.1, "cos_z", 0)


def test_empirical_measure_reports_names():
    em = empirical_measure(GOLDEN, 0.2, ["constant", "cos_z"], 1000)
    assert em.names == ("constant", "cos_z")
    assert em.as_dict()["constant"] == 0.5


def test_orbit_averages_chunking_is_seamless():
    sp = RelativeProduct(GOLDEN, _smooth_coboundary())
    starts = default_grid(3, 3, 2)
    f = [get_function("cos_diff"), get_function("sin_y1")]
    a, _ = orbit_averages(sp, starts, f, [100, 777])
    b, _ = orbit_averages(sp, starts, f, [100, 777], chunk=64, group=5)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_unknown_function_name():
    with pytest.raises(KeyError):
        get_function("cos_w")


# UE gaps ---------------------------------------------------------------------------


def test_rotation_gives_evidence():
    rep = ue_gap(GOLDEN, default_grid(1, 32), ["cos_z", "sin_z"], (1000, 10000, 100000))
    assert rep.verdict == "uniquely-ergodic-evidence"


def test_gap_decays_at_rate_c_over_n():
    # Birkhoff sums of e(z) along an irrational rotation stay below 1/|sin(pi alpha)|
    rep = ue_gap(GOLDEN, default_grid(1, 64), ["cos_z"], (10**3, 10**4, 10**5))
    C = 2.0 / abs(math.sin(math.pi * GOLDEN.alpha))
    for n in rep.horizons:
        assert rep.gap("cos_z", n) * n <= C + 1e-9


def test_identity_skew_has_full_gap():
    sp = SkewProduct(GOLDEN, ConstantCocycle.identity())
    rep = ue_gap(sp, default_grid(2, 4, 8), ["cos_y1"], (100, 1000, 10000))
    assert rep.gap("cos_y1", 10000) == pytest.approx(2.0)
    assert rep.verdict == "not-uniquely-ergodic"


def test_torus_rotation_gap_small():
    sp = SkewProduct(GOLDEN, ConstantCocycle.rotation(math.sqrt(2) - 1))
    rep = ue_gap(sp, default_grid(2, 8, 8), ["cos_y1", "sin_y1", "cos_z"], (10**6,))
    assert float(rep.gaps.max()) < 0.01
    assert rep.verdict == "uniquely-ergodic-evidence"


def test_report_csv_header():
    rep = ue_gap(GOLDEN, default_grid(1, 4), ["cos_z"], (10, 100))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "function_id,n,gap,max_start,min_start"
    assert len(lines) == 3
    assert rep.to_dict()["verdict"] in ("uniquely-ergodic-evidence", "inconclusive", "not-uniquely-ergodic")


# relative products --------------------------------------------------------------------


def test_rotation_cocycle_is_not_isomorphic():
    verdict, rep = isomorphic_extension_test(ConstantCocycle.rotation(0.2), GOLDEN, start_grid=default_grid(3, 8, 4))
    assert verdict == "not-isomorphic"
    assert rep.gap("cos_diff", 10000) == pytest.approx(2.0, abs=1e-3)


def test_diagonal_starts_reduce_to_skew_product():
    G = _smooth_coboundary()
    grid2 = default_grid(2, 8, 8)
    grid3 = np.column_stack([grid2, grid2[:, 1]])
    _, iso = isomorphic_extension_test(G, GOLDEN, ["cos_z", "cos_y1", "sin_y2"], grid3, (100, 1000))
    skew = ue_gap(SkewProduct(GOLDEN, G), grid2, [lambda z, y: np.cos(2 * np.pi * z), lambda z, y: np.cos(2 * np.pi * y), lambda z, y: np.sin(2 * np.pi * y)], (100, 1000))
    np.testing.assert_allclose(iso.gaps, skew.gaps, atol=1e-12)


def test_iso_test_needs_separating_function():
    with pytest.raises(ValueError):
        isomorphic_extension_test(ConstantCocycle.identity(), GOLDEN, ["cos_z", "cos_y1"])


def test_relative_dictionary_separates():
    assert any(get_function(f).separates_diagonal for f in RELATIVE_FUNCTIONS)
    assert get_function("cos_z").z_independent is False
    assert get_function("cos_diff").z_independent
