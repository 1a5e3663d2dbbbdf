import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewlab.base import (
    Location,
    PrecisionError,
    RotationSystem,
    SturmianSystem,
    ThueMorsePoint,
    ThueMorseSystem,
    build_rokhlin_tower,
    circle_distance,
    continued_fraction,
    min_hit,
    rotation_step,
    sturmian_fiber,
    symbolic_point,
    thue_morse,
    word_complexity,
    wrap,
)

GOLDEN = RotationSystem.golden()


# circle arithmetic ----------------------------------------------------------


def test_rotation_step_exact_addition():
    assert rotation_step(0.25, 0.25) == 0.5


def test_rotation_step_wraps():
    assert rotation_step(0.9, 0.25) == pytest.approx(0.15, abs=1e-15)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_lands_in_unit_interval(x):
    r = wrap(x)
    assert 0.0 <= r < 1.0


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_circle_distance_symmetric_and_bounded(a, b):
    d = circle_distance(a, b)
    assert d == circle_distance(b, a)
    assert 0.0 <= d <= 0.5


def test_iterating_q_k_times_returns_close():
    # ||q_k alpha|| < 1/q_{k+1} for consecutive convergents
    convs = GOLDEN.convergents
    z = 0.3141592653589793
    for k in range(3, 20):
        q, q_next = convs[k][1], convs[k + 1][1]
        zk = GOLDEN.to_float(GOLDEN.step(GOLDEN.exact(z), q))
        assert circle_distance(zk, z) < 1.0 / q_next


# continued fractions --------------------------------------------------------


def test_golden_denominators_are_fibonacci():
    q = GOLDEN.expansion.denominators[:30]
    fib = [1, 2]
    while len(fib) < 30:
        fib.append(fib[-1] + fib[-2])
    assert q[1:] == fib[: len(q) - 1]
    assert q[0] == 1


def test_inverse_pi_convergents():
    # long division: 1/pi = [0; 3, 7, 15, 1, 292, ...]
    alpha = RotationSystem.from_value("1/pi")
    cf = continued_fraction(alpha, depth=6)
    assert cf.terms[:6] == (0, 3, 7, 15, 1, 292)
    assert (1, 3) in cf.convergents and (7, 22) in cf.convergents


def test_rational_input_terminates_with_flag():
    cf = continued_fraction(Fraction(13, 8))
    assert cf.truncated
    assert cf.convergents[-1] == (13, 8)


def test_convergent_approximation_bound():
    convs = GOLDEN.convergents
    alpha = Fraction(GOLDEN.numerator, GOLDEN.modulus)
    for k in range(len(convs) - 1):
        p, q = convs[k]
        assert abs(alpha - Fraction(p, q)) < Fraction(1, q * convs[k + 1][1])
    qs = [q for _, q in convs[1:]]
    assert all(a < b for a, b in zip(qs, qs[1:]))


def test_float_alpha_is_truncated_at_trusted_precision():
    cf = continued_fraction(0.6180339887498949, depth=200)
    assert cf.truncated
    assert len(cf) < 60


def test_depth_must_be_positive():
    with pytest.raises(ValueError):
        continued_fraction(GOLDEN, depth=0)


# symbolic systems -------------------------------------------------------------


def test_sturmian_word_matches_floor_formula():
    alpha = GOLDEN.alpha
    expected = [math.floor((n + 1) * alpha) - math.floor(n * alpha) for n in range(5)]
    sys_ = SturmianSystem(GOLDEN)
    assert symbolic_point(sys_, 0.0, 0, 5).tolist() == expected


def test_thue_morse_prefix():
    assert "".join(map(str, symbolic_point(ThueMorseSystem(), ThueMorsePoint(), 0, 8))) == "01101001"
    assert thue_morse(np.arange(8)).tolist() == [0, 1, 1, 0, 1, 0, 0, 1]


def test_empty_range_gives_empty_word():
    assert symbolic_point(ThueMorseSystem(), 0, 3, 3).size == 0
    assert symbolic_point(SturmianSystem(GOLDEN), 0.2, 5, 5).size == 0


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 1, exclude_max=True))
def test_sturmian_complexity_is_L_plus_one(rho):
    word = symbolic_point(SturmianSystem(GOLDEN), rho, 0, 4000)
    for L in range(1, 13):
        assert word_complexity(word, L) == L + 1


@settings(max_examples=30, deadline=None)
@given(st.integers(-(1 << 40), 1 << 40), st.integers(-500, 500), st.integers(1, 300))
def test_thue_morse_commutes_with_complement(shift, start, length):
    tm = ThueMorseSystem()
    x = ThueMorsePoint(shift)
    assert np.array_equal(tm.word(tm.complement(x), start, start + length), 1 - tm.word(x, start, start + length))


def test_sturmian_fiber_generic_is_singleton():
    rng = np.random.default_rng(3)
    assert all(sturmian_fiber(GOLDEN, float(z), window=4096).cardinality == 1 for z in rng.random(1000))


def test_sturmian_fiber_at_zero_has_two_codings():
    fib = sturmian_fiber(GOLDEN, 0.0)
    assert fib.cardinality == 2
    sys_ = SturmianSystem(GOLDEN)
    lo, hi = (sys_.word(p, -50, 50) for p in fib.points)
    diff = np.flatnonzero(lo != hi)
    # the codings differ, and only at finitely many (here: two adjacent) positions
    assert 0 < diff.size <= 2


# Rokhlin towers ---------------------------------------------------------------


def test_min_hit_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        m = int(rng.integers(2, 400))
        a = int(rng.integers(0, m))
        lo = int(rng.integers(0, m))
        hi = int(rng.integers(lo, m))
        brute = next((x for x in range(m + 1) if lo <= (a * x) % m <= hi), None)
        assert min_hit(a, m, lo, hi) == brute


def test_tower_golden_n3():
    tower = build_rokhlin_tower(GOLDEN, 3, 0.2)
    assert tower.height == 9
    assert tower.verify_disjoint()
    assert tower.covered_measure >= Fraction(4, 5)


def test_tower_partition_is_exact():
    tower = build_rokhlin_tower(GOLDEN, 3, 0.2)
    assert tower.verify_partition()


def test_tower_heights_exceed_requirement():
    tower = build_rokhlin_tower(GOLDEN, 4, Fraction(1, 10))
    assert min(tower.heights) > 2 * 16 * 10


def test_locate_and_point_of_are_inverse():
    tower = build_rokhlin_tower(GOLDEN, 3, 0.2)
    rng = np.random.default_rng(1)
    for _ in range(200):
        z = int(rng.integers(0, 1 << 62)) * (GOLDEN.modulus >> 62) + int(rng.integers(0, 1 << 30))
        loc = tower.locate(z % GOLDEN.modulus)
        assert tower.point_of(loc) == z % GOLDEN.modulus


def test_next_column_follows_rotation():
    tower = build_rokhlin_tower(GOLDEN, 3, 0.2)
    h = tower.heights[0]
    top = Location(0, h - 1, tower.base_widths[0] // 3)
    z = tower.point_of(top)
    assert tower.locate(GOLDEN.step(z)) == tower.next_column(top)


def test_tower_requires_precision():
    low = RotationSystem.from_value(0.6180339887498949)
    with pytest.raises(PrecisionError, match="q_k"):
        build_rokhlin_tower(low, 40, 1e-9)


def test_tower_rejects_bad_gamma():
    with pytest.raises(ValueError):
        build_rokhlin_tower(GOLDEN, 3, 1.5)


def test_height_one_tower():
    tower = build_rokhlin_tower(GOLDEN, 1, 0.5)
    assert tower.height == 1
    assert tower.covered_measure >= Fraction(1, 2)


def test_rotation_equidistribution():
    n = 10**6
    orbit = GOLDEN.orbit(0.123, n)
    a, b = 0.2, 0.45
    freq = np.mean((orbit >= a) & (orbit < b))
    assert abs(freq - (b - a)) < 1e-3
