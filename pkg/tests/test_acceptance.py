"""The twelve acceptance criteria, each at its stated tolerance and runtime budget."""

import hashlib
import json
import math
import time

import numpy as np
import pytest

from skewlab.base import RotationSystem, SturmianSystem, ThueMorsePoint, ThueMorseSystem, build_rokhlin_tower, sturmian_fiber
from skewlab.cli import main
from skewlab.coboundary import build_coboundary, lemma_la_path, verify_E_membership
from skewlab.ergodicity import default_grid, isomorphic_extension_test
from skewlab.lyapunov import HERMAN_BASELINE, FurmanConfig, lyapunov_estimate
from skewlab.metrics import (
    SkewProjection,
    SturmianFactor,
    besicovitch_estimate,
    besicovitch_from_distances,
    distance_sequence,
    fiber_diameter_profile,
    mean_equicontinuity_modulus,
    weyl_estimate,
    weyl_from_distances,
)
from skewlab.skew import ConstantCocycle, MobiusCocycle, SkewProduct, load_cocycle, parse_cocycle, projective_distance, save_cocycle

GOLDEN = RotationSystem.golden()


def test_01_isometry_constancy(criterion):
    rng = np.random.default_rng(1)
    pairs = rng.random((100, 2))
    t0 = time.perf_counter()
    worst = 0.0
    for x, y in pairs:
        d = GOLDEN.metric(x, y)
        worst = max(worst, abs(besicovitch_estimate(GOLDEN, x, y, 10**4).value - d), abs(weyl_estimate(GOLDEN, x, y, 10**4).value - d))
    elapsed = time.perf_counter() - t0
    criterion(1, "isometry constancy", worst <= 1e-12, f"max |d_hat - d| = {worst:.2e}", elapsed, 1.0)


def test_02_rotation_modulus(criterion):
    eps = (0.02, 0.05, 0.1, 0.2)
    t0 = time.perf_counter()
    prof = mean_equicontinuity_modulus(GOLDEN, eps, rng=np.random.default_rng(2))
    elapsed = time.perf_counter() - t0
    expected = tuple(max((d for d in prof.delta_grid if d <= e), default=0.0) for e in eps)
    criterion(2, "rotation modulus", prof.delta == expected, f"delta_hat = {prof.delta}, expected {expected}", elapsed, 10.0)


def test_03_sturmian_vs_thue_morse(criterion):
    t0 = time.perf_counter()
    sys_ = SturmianSystem(GOLDEN)
    # doubly coded points lie on the orbit of 0; pass them exactly as 64-bit fixed point
    with np.errstate(over="ignore"):
        fibers = [sturmian_fiber(sys_, np.uint64(k) * GOLDEN.alpha_u64) for k in range(5)]
    st = [besicovitch_estimate(sys_, *f.points, 10**5).value for f in fibers if f.cardinality == 2]
    tm = ThueMorseSystem()
    rng = np.random.default_rng(3)
    xs = [ThueMorsePoint(int(s)) for s in rng.integers(-(1 << 40), 1 << 40, 10)]
    tms = [besicovitch_estimate(tm, x, tm.complement(x), 10**4).value for x in xs]
    elapsed = time.perf_counter() - t0
    ok = len(st) == 5 and max(st) <= 0.05 and min(tms) >= 0.5
    criterion(3, "Sturmian vs Thue-Morse", ok, f"Sturmian max d_B = {max(st):.3g}, Thue-Morse min d_B = {min(tms):.3g}", elapsed, 30.0)


def test_04_fiber_dichotomy(criterion):
    t0 = time.perf_counter()
    zs = np.random.default_rng(4).random(1000)
    skew = [
        fiber_diameter_profile(SkewProjection(SkewProduct(GOLDEN, ConstantCocycle.rotation(0.2))), zs[:200]).inf_estimate,
        fiber_diameter_profile(SkewProjection(SkewProduct(GOLDEN, MobiusCocycle(2.0))), zs[:200]).inf_estimate,
    ]
    sturm = fiber_diameter_profile(SturmianFactor(SturmianSystem(GOLDEN)), zs).inf_estimate
    elapsed = time.perf_counter() - t0
    ok = skew == [0.5, 1.0] and sturm == 0.0
    criterion(4, "fiber dichotomy", ok, f"skew inf = {skew} (diam 0.5, 1), Sturmian inf = {sturm}", elapsed, 5.0)


def test_05_iso_negative(criterion):
    t0 = time.perf_counter()
    verdict, rep = isomorphic_extension_test(ConstantCocycle.rotation(0.3), GOLDEN, ["cos_diff"], default_grid(3, 8, 8))
    elapsed = time.perf_counter() - t0
    gaps = [rep.gap("cos_diff", n) for n in rep.horizons]
    ok = verdict == "not-isomorphic" and min(gaps) >= 1.0
    criterion(5, "iso-test negative certificate", ok, f"{verdict}, gaps {[round(g, 6) for g in gaps]}", elapsed, 5.0)


def test_06_rokhlin_tower(criterion):
    t0 = time.perf_counter()
    tower = build_rokhlin_tower(GOLDEN, 4, 0.1)
    disjoint = tower.verify_disjoint()
    elapsed = time.perf_counter() - t0
    ok = tower.height == 16 and disjoint and tower.covered_measure >= 0.9
    criterion(6, "Rokhlin tower exactness", ok, f"height {tower.height}, disjoint {disjoint}, covered {float(tower.covered_measure):.4f}", elapsed, 1.0)


def test_07_path_certificate(criterion):
    t0 = time.perf_counter()
    path = lemma_la_path((0.35, 0.3), 0.2)
    worst = path.verify(1000)
    elapsed = time.perf_counter() - t0
    criterion(7, "path measure bound", worst < 0.2, f"max violation measure {worst:.4g} < 0.2", elapsed, 10.0)


@pytest.mark.slow
def test_08_coboundary_end_to_end(criterion, tmp_path):
    t0 = time.perf_counter()
    res = build_coboundary(GOLDEN, "diag_cosine", 0.25, 0.25)
    cert = res.report["certificates"]
    G = load_cocycle(save_cocycle(res.G, tmp_path / "cocycle.json"))
    rep = verify_E_membership(G, "diag_cosine", 0.25, GOLDEN)
    elapsed = time.perf_counter() - t0
    ok = res.passed and cert["distance_to_identity"] < 0.25 and cert["integral_deviation"] < 0.25 and rep.best_deviation < 0.5
    detail = (
        f"d(G, Id) = {cert['distance_to_identity']:.3g}, integral deviation {cert['integral_deviation']:.3g}, "
        f"membership deviation {rep.best_deviation:.3g} at n = {rep.best_n}"
    )
    criterion(8, "coboundary end-to-end", ok, detail, elapsed, 300.0)


def test_09_lyapunov_exactness(criterion):
    t0 = time.perf_counter()
    diag = lyapunov_estimate(parse_cocycle("diag:2"), GOLDEN, 0.3, 10**3).lambda_hat
    rot = lyapunov_estimate(parse_cocycle("mobius-rotation:0.9"), GOLDEN, 0.3, 10**3).lambda_hat
    elapsed = time.perf_counter() - t0
    ok = abs(diag - math.log(2)) <= 1e-9 and rot <= 1e-9
    criterion(9, "Lyapunov exactness", ok, f"diag |err| = {abs(diag - math.log(2)):.2e}, rotation {rot:.2e}", elapsed, 1.0)


@pytest.mark.slow
def test_10_furman_classification(criterion, tmp_path):
    t0 = time.perf_counter()
    out = {}
    for name, spec in [("rotation", "mobius-rotation:0.7"), ("diag", "diag:2"), ("herman", "herman:2")]:
        code = main(["classify", "--set", f"cocycle={spec}", "--out", str(tmp_path / name)])
        out[name] = (code, json.loads((tmp_path / name / "classify.json").read_text())["report"])
    elapsed = time.perf_counter() - t0
    d = out["diag"][1]["direction_data"]
    axes = max(
        max(projective_distance(np.array(d["u_plus_sample"]), 0.0)),
        max(projective_distance(np.array(d["u_minus_sample"]), math.pi / 2)),
    )
    herman = out["herman"][1]
    threshold = FurmanConfig().uniformity_threshold
    ok = (
        all(code == 0 for code, _ in out.values())
        and out["rotation"][1]["assigned_class"] == "Case1"
        and out["diag"][1]["assigned_class"] == "Case2b"
        and axes <= 1e-6
        and herman["assigned_class"] == "Case2a"
        and herman["uniformity_gap"] > threshold
        and abs(herman["uniformity_gap"] - HERMAN_BASELINE["uniformity_gap_1e4"]) < 1e-9
    )
    detail = (
        f"rotation {out['rotation'][1]['assigned_class']}, diag {out['diag'][1]['assigned_class']} (axes err {axes:.1e}), "
        f"Herman {herman['assigned_class']} (gap {herman['uniformity_gap']:.3g} > {threshold:g})"
    )
    criterion(10, "Furman classification", ok, detail, elapsed, 180.0)


DETERMINISM_RUNS = [
    ["pseudometric", "--set", "pair_budget=100", "--set", "horizon=300", "--set", "csv_pairs=20"],
    ["pseudometric", "--set", "system=thue-morse", "--set", "pair_budget=100", "--set", "horizon=300", "--set", "csv_pairs=20"],
    ["fiber-profile", "--set", "system=sturmian", "--set", "samples=100"],
    ["build-coboundary"],
    ["ue-test", "--set", "grid_z=8", "--set", "schedule=100,1000"],
    ["iso-test", "--set", "grid_z=4", "--set", "grid_y=4", "--set", "schedule=100,1000"],
    ["lyapunov", "--set", "random_starts=true", "--set", "n=5000"],
    ["classify", "--set", "cocycle=diag:2", "--set", "lambda_horizon=10000", "--set", "uniformity_starts=100"],
]


@pytest.mark.slow
def test_11_determinism(criterion, tmp_path):
    t0 = time.perf_counter()
    mismatched = []
    for i, args in enumerate(DETERMINISM_RUNS):
        digests = []
        for rep in ("a", "b"):
            d = tmp_path / f"{i}{rep}"
            main([*args, "--seed", "11", "--out", str(d)])
            digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())})
        if digests[0] != digests[1] or not digests[0]:
            mismatched.append(args[0])
    # the saved cocycle is itself an input: verify it twice as well
    cocycle = tmp_path / "3a" / "cocycle.json"
    digests = []
    for rep in ("a", "b"):
        d = tmp_path / f"verify{rep}"
        main(["verify-cocycle", "--set", f"cocycle={cocycle}", "--set", "schedule=1000,10000", "--set", "grid_z=8", "--seed", "11", "--out", str(d)])
        digests.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())})
    if digests[0] != digests[1]:
        mismatched.append("verify-cocycle")
    elapsed = time.perf_counter() - t0
    criterion(11, "determinism", not mismatched, f"9 commands rerun, mismatches: {mismatched or 'none'}", elapsed, 120.0)


def test_12_weyl_dominates_besicovitch(criterion):
    rng = np.random.default_rng(12)
    systems = {
        "rotation": GOLDEN,
        "sturmian": SturmianSystem(GOLDEN),
        "thue-morse": ThueMorseSystem(),
        "skew-circle": SkewProduct(GOLDEN, ConstantCocycle.rotation(0.2)),
        "skew-projective": SkewProduct(GOLDEN, MobiusCocycle(2.0)),
    }
    n, per = 400, 200
    t0 = time.perf_counter()
    violations, total = 0, 0
    for i, system in enumerate(systems.values()):
        for k in range(per):
            x = system.random_point(rng)
            y = system.random_near(x, float(rng.choice([0.01, 0.05, 0.2, 0.5])), rng) if k % 2 else system.random_point(rng)
            d = distance_sequence(system, x, y, n)
            w = int(rng.integers(1, n + 1))
            violations += weyl_from_distances(d, w).value < besicovitch_from_distances(d).value
            total += 1
    elapsed = time.perf_counter() - t0
    criterion(12, "Weyl dominates Besicovitch", violations == 0 and total == 1000, f"{violations} violations in {total} pairs over {len(systems)} systems", elapsed, 30.0)
