"""Strictly ergodic base systems.

Circle rotations are stored in fixed point: ``alpha = numerator / 2**bits``.
Exact work (towers, critical orbits, fiber splits) uses Python integers at
``bits`` precision; fast orbit generation uses the top 64 bits in ``uint64``
arithmetic, which wraps modulo ``2**64`` and therefore is itself an exact
rotation of ``Z / 2**64``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

DEFAULT_BITS = 192
TWO64 = 1 << 64


class PrecisionError(ValueError):
    """Raised when the stored rotation number cannot support a request."""


# ---------------------------------------------------------------------------
# circle arithmetic


def wrap(z):
    """Reduce to ``[0, 1)``."""
    r = z - np.floor(z)
    # can round to 1.0 for tiny negative inputs
    return np.where(r >= 1.0, 0.0, r) if isinstance(r, np.ndarray) else (0.0 if r >= 1.0 else float(r))


def circle_distance(a, b):
    """``min(|a-b|, 1-|a-b|)`` on R/Z; symmetric and at most 1/2."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = d - np.floor(d)  # |a - b| is exactly symmetric; reduce after taking it
    d = np.minimum(d, 1.0 - d)
    return float(d) if d.ndim == 0 else d


def rotation_step(z: float, alpha: float) -> float:
    return wrap(z + alpha)


def to_u64(z) -> np.ndarray:
    """Float points of the circle to 64-bit fixed point (exact for dyadic floats)."""
    z = np.asarray(wrap(np.asarray(z, dtype=float)), dtype=float)
    return np.ldexp(z, 64).astype(np.uint64)


def u64_to_float(v) -> np.ndarray:
    r = np.ldexp(np.asarray(v, dtype=np.uint64).astype(np.float64), -64)
    return np.where(r >= 1.0, 0.0, r)  # values within 2**-53 of a full turn round up


def u64_distance(a, b) -> np.ndarray:
    """Circle distance between 64-bit fixed-point points."""
    with np.errstate(over="ignore"):
        d = (np.asarray(a, dtype=np.uint64) - np.asarray(b, dtype=np.uint64)).astype(np.uint64)
        e = (np.uint64(0) - d).astype(np.uint64)
    return np.ldexp(np.minimum(d, e).astype(np.float64), -64)


# ---------------------------------------------------------------------------
# continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    terms: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    truncated: bool

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.convergents)

    def __len__(self) -> int:
        return len(self.convergents)

    def __getitem__(self, k):
        return self.convergents[k]

    @property
    def denominators(self) -> list[int]:
        return [q for _, q in self.convergents]


def _as_fraction(alpha) -> tuple[Fraction, int | None]:
    """Exact rational value plus the number of bits that can be trusted."""
    if isinstance(alpha, RotationSystem):
        return Fraction(alpha.numerator, alpha.modulus), alpha.trusted_bits
    if isinstance(alpha, Fraction):
        return alpha, None
    if isinstance(alpha, int):
        return Fraction(alpha), None
    if isinstance(alpha, float):
        return Fraction(alpha), 53
    raise TypeError(f"cannot expand {type(alpha).__name__}")


def continued_fraction(alpha, depth: int = 64) -> ContinuedFraction:
    """Regular continued fraction convergents ``(p_k, q_k)``, ``k = 0, 1, ...``.

    ``truncated`` is set when the expansion terminates (rational input) or when
    further convergents would exceed the trusted precision of ``alpha``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x, trusted = _as_fraction(alpha)
    limit = None if trusted is None else 1 << max(trusted - 2, 0)
    terms: list[int] = []
    convs: list[tuple[int, int]] = []
    p_prev, q_prev, p, q = 0, 1, 1, 0
    truncated = False
    while len(convs) < depth:
        a = math.floor(x)
        p_new, q_new = a * p + p_prev, a * q + q_prev
        if limit is not None and convs and q_new * convs[-1][1] * 2 > limit:
            truncated = True
            break
        terms.append(a)
        convs.append((p_new, q_new))
        p_prev, q_prev, p, q = p, q, p_new, q_new
        frac = x - a
        if frac == 0:
            truncated = True
            break
        x = 1 / frac
    return ContinuedFraction(tuple(terms), tuple(convs), truncated)


# ---------------------------------------------------------------------------
# rotations

_EXPR_OK = re.compile(r"^[0-9a-z_.+\-*/() ]+$")


def _eval_expression(text: str, bits: int):
    import mpmath

    if not _EXPR_OK.match(text):
        raise ValueError(f"unsupported characters in rotation number {text!r}")
    old = mpmath.mp.prec
    try:
        mpmath.mp.prec = bits + 64
        names = {
            "sqrt": mpmath.sqrt, "pi": mpmath.pi, "e": mpmath.e, "exp": mpmath.exp,
            "log": mpmath.log, "cbrt": mpmath.cbrt, "golden": (mpmath.sqrt(5) - 1) / 2,
            "silver": mpmath.sqrt(2) - 1,
        }
        value = eval(text, {"__builtins__": {}}, names)  # noqa: S307 - charset and names restricted above
        value = mpmath.mpf(value)
        return int(mpmath.floor(mpmath.ldexp(value - mpmath.floor(value), bits)))
    finally:
        mpmath.mp.prec = old


@dataclass(frozen=True)
class RotationSystem:
    """Irrational rotation ``z -> z + alpha`` of the circle.

    ``alpha = numerator / 2**bits`` exactly; ``trusted_bits`` records how many
    of those bits agree with the intended irrational number.
    """

    numerator: int
    bits: int = DEFAULT_BITS
    trusted_bits: int = DEFAULT_BITS
    label: str = ""

    def __post_init__(self):
        if not 0 < self.numerator < (1 << self.bits):
            raise ValueError("alpha must lie in (0, 1)")
        if self.bits < 64:
            raise ValueError("at least 64 bits of fixed point are required")

    # constructors --------------------------------------------------------
    @classmethod
    def golden(cls, bits: int = DEFAULT_BITS) -> "RotationSystem":
        num = (math.isqrt(5 << (2 * bits)) - (1 << bits)) // 2
        return cls(num, bits, bits, "golden")

    @classmethod
    def silver(cls, bits: int = DEFAULT_BITS) -> "RotationSystem":
        num = math.isqrt(2 << (2 * bits)) - (1 << bits)
        return cls(num, bits, bits, "silver")

    @classmethod
    def from_value(cls, alpha, bits: int = DEFAULT_BITS) -> "RotationSystem":
        """Build from a float, Fraction, or expression string such as ``"sqrt(2)-1"``."""
        if isinstance(alpha, RotationSystem):
            return alpha
        if isinstance(alpha, str):
            key = alpha.strip().lower()
            if key == "golden":
                return cls.golden(bits)
            if key == "silver":
                return cls.silver(bits)
            return cls(_eval_expression(key, bits), bits, bits, alpha.strip())
        if isinstance(alpha, float):
            x = Fraction(alpha) % 1
            return cls(math.floor(x * (1 << bits)), bits, 53, repr(alpha))
        if isinstance(alpha, Fraction):
            x = alpha % 1
            return cls(math.floor(x * (1 << bits)), bits, bits, str(alpha))
        raise TypeError(f"cannot build a rotation from {type(alpha).__name__}")

    # views ---------------------------------------------------------------
    @property
    def modulus(self) -> int:
        return 1 << self.bits

    @property
    def alpha(self) -> float:
        return self.numerator / self.modulus

    @cached_property
    def alpha_u64(self) -> np.uint64:
        return np.uint64(self.numerator >> (self.bits - 64))

    @cached_property
    def expansion(self) -> ContinuedFraction:
        return continued_fraction(self, depth=4 * self.bits)

    @property
    def convergents(self) -> tuple[tuple[int, int], ...]:
        return self.expansion.convergents

    diameter = 0.5

    # exact points ----------------------------------------------------------
    def exact(self, z) -> int:
        """Fixed-point numerator of a point given as float, Fraction or int."""
        if isinstance(z, (int, np.integer)) and not isinstance(z, bool):
            return int(z) % self.modulus
        return math.floor((Fraction(float(z)) % 1) * self.modulus)

    def to_float(self, z: int) -> float:
        return (z % self.modulus) / self.modulus

    def step(self, z, k: int = 1):
        """``S^k z``; exact when ``z`` is an integer numerator."""
        if isinstance(z, (int, np.integer)) and not isinstance(z, bool):
            return (int(z) + k * self.numerator) % self.modulus
        return wrap(np.asarray(z, dtype=float) + k * self.alpha) if isinstance(z, np.ndarray) else wrap(z + k * self.alpha)

    # fast orbits ------------------------------------------------------------
    def orbit_u64(self, z, n: int, start: int = 0) -> np.ndarray:
        """``S^i z`` for ``start <= i < start + n`` in 64-bit fixed point."""
        z64 = to_u64(z) if not isinstance(z, np.uint64) else z
        idx = np.arange(start, start + n, dtype=np.int64).astype(np.uint64)
        return (np.uint64(z64) + idx * self.alpha_u64).astype(np.uint64)

    def orbit(self, z, n: int, start: int = 0) -> np.ndarray:
        return u64_to_float(self.orbit_u64(z, n, start))

    # metric-system protocol --------------------------------------------------
    def metric(self, x, y) -> float:
        return circle_distance(x, y)

    def distances(self, x, y, n: int) -> np.ndarray:
        return u64_distance(self.orbit_u64(x, n), self.orbit_u64(y, n))

    def random_point(self, rng: np.random.Generator) -> float:
        return float(rng.random())

    def random_near(self, x, delta: float, rng: np.random.Generator) -> float:
        return wrap(x + (2.0 * rng.random() - 1.0) * delta * (1 - 1e-12))

    def describe(self) -> dict:
        return {"system": "rotation", "alpha": self.alpha, "label": self.label, "bits": self.bits}


# ---------------------------------------------------------------------------
# symbolic systems


def thue_morse(n) -> np.ndarray:
    """Binary digit-sum parity ``t(n)`` for ``n >= 0``."""
    n = np.asarray(n, dtype=np.int64)
    return (np.bitwise_count(n.astype(np.uint64)) & 1).astype(np.uint8)


def _two_sided_tm(j: np.ndarray) -> np.ndarray:
    # u[j] = t(j) for j >= 0 and t(-j-1) for j < 0 (a two-sided fixed point of the square substitution)
    j = np.asarray(j, dtype=np.int64)
    return thue_morse(np.where(j >= 0, j, -j - 1))


@dataclass(frozen=True)
class SturmianPoint:
    rho: int  # intercept, 64-bit fixed point
    upper: bool = False


@dataclass(frozen=True)
class ThueMorsePoint:
    shift: int = 0
    flip: bool = False


SYMBOLIC_HALF_WIDTH = 64
_W = 2.0 ** -np.abs(np.arange(-SYMBOLIC_HALF_WIDTH, SYMBOLIC_HALF_WIDTH + 1))
_W_NORM = float(_W.sum())


def symbolic_distance_sequence(word_x: np.ndarray, word_y: np.ndarray) -> np.ndarray:
    """Truncated product metric applied at each position of two aligned words.

    The words cover ``[-K, n + K)``; the result has length ``n`` and entry ``i``
    is ``sum_{|k|<=K} 2^-|k| |x_{i+k} - y_{i+k}|`` normalised to diameter 1.
    """
    diff = (word_x != word_y).astype(np.float64)
    return np.convolve(diff, _W, mode="valid") / _W_NORM


class _SymbolicBase:
    diameter = 1.0

    def word(self, point, start: int, stop: int) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def distances(self, x, y, n: int) -> np.ndarray:
        K = SYMBOLIC_HALF_WIDTH
        return symbolic_distance_sequence(self.word(x, -K, n + K), self.word(y, -K, n + K))

    def metric(self, x, y) -> float:
        return float(self.distances(x, y, 1)[0])


@dataclass(frozen=True)
class SturmianSystem(_SymbolicBase):
    """Sturmian subshift coding the rotation by the partition ``[0, 1-alpha) | [1-alpha, 1)``."""

    rotation: RotationSystem = field(default_factory=RotationSystem.golden)

    @property
    def alpha_u64(self) -> np.uint64:
        return self.rotation.alpha_u64

    def point(self, rho: float, upper: bool = False) -> SturmianPoint:
        return SturmianPoint(int(to_u64(rho)), upper)

    def word(self, point: SturmianPoint, start: int, stop: int) -> np.ndarray:
        if stop <= start:
            return np.zeros(0, dtype=np.uint8)
        a = self.alpha_u64
        frac = self.rotation.orbit_u64(np.uint64(point.rho), stop - start, start)
        threshold = np.uint64(TWO64 - int(a))  # 1 - alpha
        if point.upper:
            bits = (frac > threshold) | (frac == 0)
        else:
            bits = frac >= threshold
        return bits.astype(np.uint8)

    def shift(self, point: SturmianPoint, k: int = 1) -> SturmianPoint:
        rho = (point.rho + k * int(self.alpha_u64)) % TWO64
        return SturmianPoint(rho, point.upper)

    def factor(self, point: SturmianPoint) -> float:
        """Image under the factor map onto the rotation."""
        return float(u64_to_float(np.uint64(point.rho)))

    def random_point(self, rng: np.random.Generator) -> SturmianPoint:
        return SturmianPoint(int(rng.integers(0, TWO64, dtype=np.uint64)), False)

    def random_near(self, x: SturmianPoint, delta: float, rng: np.random.Generator) -> SturmianPoint:
        # shrink an intercept perturbation until the metric bound holds
        scale = delta
        for _ in range(200):
            step = int((2.0 * rng.random() - 1.0) * scale * TWO64)
            y = SturmianPoint((x.rho + step) % TWO64, x.upper)
            if self.metric(x, y) < delta:
                return y
            scale *= 0.5
        return x

    def describe(self) -> dict:
        return {"system": "sturmian", "alpha": self.rotation.alpha, "label": self.rotation.label}


@dataclass(frozen=True)
class ThueMorseSystem(_SymbolicBase):
    """Two-sided Thue-Morse subshift; points are shifts of a fixed point or its complement."""

    def word(self, point: ThueMorsePoint, start: int, stop: int) -> np.ndarray:
        if stop <= start:
            return np.zeros(0, dtype=np.uint8)
        w = _two_sided_tm(np.arange(start, stop, dtype=np.int64) + point.shift)
        return w ^ np.uint8(point.flip)

    def shift(self, point: ThueMorsePoint, k: int = 1) -> ThueMorsePoint:
        return ThueMorsePoint(point.shift + k, point.flip)

    def complement(self, point: ThueMorsePoint) -> ThueMorsePoint:
        return ThueMorsePoint(point.shift, not point.flip)

    def random_point(self, rng: np.random.Generator) -> ThueMorsePoint:
        return ThueMorsePoint(int(rng.integers(-(1 << 40), 1 << 40)), bool(rng.integers(0, 2)))

    def random_near(
        self, x: ThueMorsePoint, delta: float, rng: np.random.Generator, source: ThueMorsePoint | None = None
    ) -> ThueMorsePoint:
        """A shift of ``source`` (default ``x``) within ``delta`` of ``x``.

        Found by searching ahead for central agreement; with ``source = x-bar``
        this yields pairs from different complement classes at small distance.
        """
        source = x if source is None else source
        # agreement on the central window |k| <= r bounds the distance by 2^(1-r) / W
        r = max(0, math.ceil(1 - math.log2(delta * _W_NORM)) + 1) if delta < 1 else 0
        span = 64 * (2 * r + 1) + 64
        centre = self.word(x, -r, r + 1)
        ahead = self.word(source, -r, r + 1 + span)
        windows = np.lib.stride_tricks.sliding_window_view(ahead, 2 * r + 1)[1:]
        shifts = np.flatnonzero((windows == centre).all(axis=1)) + 1
        for s in rng.permutation(shifts)[:64]:
            y = ThueMorsePoint(source.shift + int(s), source.flip)
            if self.metric(x, y) < delta:
                return y
        return x

    def describe(self) -> dict:
        return {"system": "thue-morse"}


def symbolic_point(system, seed, start: int, stop: int) -> np.ndarray:
    """Coordinates ``x[start:stop]`` of a symbolic point.

    ``seed`` is a :class:`SturmianPoint`/:class:`ThueMorsePoint`, or for
    Sturmian systems a float intercept.
    """
    if isinstance(system, SturmianSystem) and not isinstance(seed, SturmianPoint):
        seed = system.point(float(seed))
    if isinstance(system, ThueMorseSystem) and not isinstance(seed, ThueMorsePoint):
        seed = ThueMorsePoint(int(seed))
    return system.word(seed, start, stop)


def word_complexity(word: Sequence[int] | np.ndarray, length: int) -> int:
    """Number of distinct factors of the given length."""
    w = np.asarray(word, dtype=np.uint8)
    if length > len(w):
        return 0
    if length == 0:
        return 1
    codes = np.zeros(len(w) - length + 1, dtype=np.uint64)
    for k in range(length):
        codes = (codes << np.uint64(1)) | w[k: len(w) - length + 1 + k].astype(np.uint64)
    return int(np.unique(codes).size)


@dataclass(frozen=True)
class SturmianFiber:
    points: tuple[SturmianPoint, ...]
    critical_index: int | None  # m with z = -m*alpha, when the fiber splits

    @property
    def cardinality(self) -> int:
        return len(self.points)


def sturmian_fiber(rot: RotationSystem | SturmianSystem, z, window: int = 1 << 16) -> SturmianFiber:
    """Codings of ``z`` under the Sturmian factor map.

    The lower and upper codings differ exactly when some ``z + n alpha`` hits
    ``0`` or ``1 - alpha``, i.e. when ``z = -m alpha`` for an integer ``m``.
    That is checked exactly for ``|m| <= window``.
    """
    system = rot if isinstance(rot, SturmianSystem) else SturmianSystem(rot)
    z64 = np.uint64(z) if isinstance(z, (np.uint64, int)) and not isinstance(z, bool) else to_u64(z)[()]
    ms = np.arange(-window, window + 1, dtype=np.int64)
    hits = (np.uint64(z64) + ms.astype(np.uint64) * system.alpha_u64).astype(np.uint64) == 0
    lower = SturmianPoint(int(z64), False)
    if not hits.any():
        return SturmianFiber((lower,), None)
    m = int(ms[np.argmax(hits)])
    return SturmianFiber((lower, SturmianPoint(int(z64), True)), m)


# ---------------------------------------------------------------------------
# Kakutani-Rokhlin towers


def min_hit(a: int, m: int, lo: int, hi: int) -> int | None:
    """Smallest ``x >= 0`` with ``lo <= (a*x) % m <= hi`` (``0 <= lo <= hi < m``), else None."""
    a %= m
    if lo == 0:
        return 0
    if a == 0:
        return None
    x = -(-lo // a)
    if a * x <= hi:
        return x
    # a*x - m*y must land in [lo, hi]; the y-condition is a smaller instance
    y = min_hit(m % a, a, (-hi) % a, (-lo) % a)
    if y is None:
        return None
    x = -(-(lo + m * y) // a)
    return x if a * x - m * y <= hi else None


@dataclass(frozen=True)
class Location:
    tower: int  # 0 = tall tower (height q_k), 1 = short tower (height q_{k-1})
    level: int
    offset: int


@dataclass(frozen=True)
class RokhlinTower:
    """Set ``K`` (finite union of arcs) with ``N**2`` pairwise disjoint images.

    Built from the two-tower Kakutani-Rokhlin partition of a rotation at a
    continued-fraction scale ``k``: tower 0 has height ``q_k`` over an arc of
    width ``||q_{k-1} alpha||``, tower 1 height ``q_{k-1}`` over width
    ``||q_k alpha||``. Each tower's levels are grouped into blocks of ``N**2``;
    ``K`` is the union of block-start levels shrunk by a margin on each side.
    All lengths and positions are fixed-point integers at the rotation's precision.
    """

    rotation: RotationSystem
    N: int
    gamma: Fraction
    k: int
    heights: tuple[int, int]
    base_starts: tuple[int, int]
    base_widths: tuple[int, int]
    margins: tuple[int, int]
    n_blocks: tuple[int, int]
    arcs: tuple[tuple[int, int], ...]  # (start, length) sorted by start
    arc_index: dict = field(repr=False, compare=False, hash=False)  # (tower, block) -> position in arcs
    arc_cdf: tuple[int, ...] = field(repr=False)  # measure of K before each arc

    @property
    def height(self) -> int:
        return self.N * self.N

    @property
    def K_length(self) -> int:
        return sum(length for _, length in self.arcs)

    @property
    def covered_measure(self) -> Fraction:
        return Fraction(self.height * self.K_length, self.rotation.modulus)

    @property
    def base_arcs(self) -> list[tuple[float, float]]:
        M = self.rotation.modulus
        return [(s / M, length / M) for s, length in self.arcs]

    @property
    def scale_q(self) -> tuple[int, int]:
        return self.heights

    def image_arcs(self, r: int) -> list[tuple[int, int]]:
        M, A = self.rotation.modulus, self.rotation.numerator
        return [((s + r * A) % M, length) for s, length in self.arcs]

    def verify_disjoint(self, max_arcs: int = 4_000_000) -> bool:
        """Exact check that ``S^r K`` for ``r < N**2`` are pairwise disjoint."""
        total = self.height * len(self.arcs)
        if total > max_arcs:
            raise ValueError(f"{total} arcs exceed the exhaustive-check limit {max_arcs}")
        M = self.rotation.modulus
        pieces = []
        for r in range(self.height):
            for s, length in self.image_arcs(r):
                end = s + length
                if end <= M:
                    pieces.append((s, end))
                else:
                    pieces.append((s, M))
                    pieces.append((0, end - M))
        pieces.sort()
        return all(pieces[i][1] <= pieces[i + 1][0] for i in range(len(pieces) - 1))

    def verify_partition(self, max_levels: int = 4_000_000) -> bool:
        """Exact check that the two Kakutani-Rokhlin towers tile the circle."""
        if sum(self.heights) > max_levels:
            raise ValueError("too many levels for an exhaustive check")
        M, A = self.rotation.modulus, self.rotation.numerator
        pieces = []
        for t in (0, 1):
            for j in range(self.heights[t]):
                s = (self.base_starts[t] + j * A) % M
                end = s + self.base_widths[t]
                pieces.extend([(s, end)] if end <= M else [(s, M), (0, end - M)])
        pieces.sort()
        ok = pieces[0][0] == 0 and pieces[-1][1] == M
        return ok and all(pieces[i][1] == pieces[i + 1][0] for i in range(len(pieces) - 1))

    # point location ------------------------------------------------------------
    @cached_property
    def _base(self) -> tuple[int, int]:
        # the union of both bases is one arc [start, start + width)
        s0, s1 = self.base_starts
        w0, w1 = self.base_widths
        M = self.rotation.modulus
        start = s0 if (s0 + w0) % M == s1 else s1
        return start, w0 + w1

    def locate(self, z: int) -> Location:
        """Tower, level and offset of an exact point (``z`` numerator mod 2**bits)."""
        M, A = self.rotation.modulus, self.rotation.numerator
        start, width = self._base
        D = (z - start) % M
        if D < width:
            x = 0
        else:
            x = min_hit(A, M, D - width + 1, D)
            if x is None:  # pragma: no cover - impossible for an irrational-type rotation
                raise PrecisionError("point does not return to the tower base")
        w = (D - x * A) % M
        return self._from_base(w, x)

    def _from_base(self, w: int, level: int) -> Location:
        start, _ = self._base
        first = 0 if start == self.base_starts[0] else 1
        if w < self.base_widths[first]:
            t, u = first, w
        else:
            t, u = 1 - first, w - self.base_widths[first]
        if level >= self.heights[t]:  # pragma: no cover - guarded by the partition identity
            raise PrecisionError("level exceeds tower height")
        return Location(t, level, u)

    def point_of(self, loc: Location) -> int:
        M, A = self.rotation.modulus, self.rotation.numerator
        return (self.base_starts[loc.tower] + loc.level * A + loc.offset) % M

    def next_column(self, loc: Location) -> Location:
        """Location of ``S z`` for ``z`` on the top level of its tower."""
        M = self.rotation.modulus
        start, _ = self._base
        z = (self.point_of(loc) + self.rotation.numerator) % M
        return self._from_base((z - start) % M, 0)

    def block_arc(self, tower: int, block: int) -> int | None:
        return self.arc_index.get((tower, block))


def build_rokhlin_tower(rot: RotationSystem, N: int, gamma) -> RokhlinTower:
    """Rokhlin tower of height ``N**2`` whose images cover measure ``>= 1 - gamma``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    gamma = Fraction(gamma).limit_denominator(1 << 60) if isinstance(gamma, float) else Fraction(gamma)
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    NN = N * N
    needed = 2 * NN / gamma
    convs = rot.convergents
    k = next((i for i in range(1, len(convs)) if convs[i - 1][1] > needed), None)
    if k is None:
        q_needed = math.floor(needed) + 1
        raise PrecisionError(
            f"tower needs a convergent denominator q_k > {q_needed}, beyond the "
            f"{rot.trusted_bits} trusted bits of alpha (largest q = {convs[-1][1]})"
        )
    M, A = rot.modulus, rot.numerator
    (p1, q1), (p0, q0) = convs[k], convs[k - 1]
    d1, d0 = q1 * A - p1 * M, q0 * A - p0 * M
    a, b = abs(d1), abs(d0)
    if q1 * b + q0 * a != M or d1 == 0 or (d1 > 0) == (d0 > 0):
        raise PrecisionError("convergents inconsistent with the stored rotation")
    if d1 > 0:
        starts = (M - b, 0)
    else:
        starts = (0, M - a)
    widths = (b, a)
    heights = (q1, q0)
    margins = tuple(-(-(w * gamma.numerator) // (8 * gamma.denominator)) for w in widths)
    n_blocks = tuple(h // NN for h in heights)
    raw = []
    for t in (0, 1):
        length = widths[t] - 2 * margins[t]
        if length <= 0:
            raise PrecisionError("tower levels are narrower than the representation resolution")
        for blk in range(n_blocks[t]):
            s = (starts[t] + blk * NN * A + margins[t]) % M
            raw.append((s, length, t, blk))
    raw.sort()
    arcs = tuple((s, length) for s, length, _, _ in raw)
    index = {(t, blk): i for i, (_, _, t, blk) in enumerate(raw)}
    cdf, acc = [], 0
    for _, length in arcs:
        cdf.append(acc)
        acc += length
    tower = RokhlinTower(rot, N, gamma, k, heights, starts, widths, margins, n_blocks, arcs, index, tuple(cdf))
    if tower.covered_measure < 1 - gamma:
        raise PrecisionError("tower coverage below 1 - gamma")
    return tower
