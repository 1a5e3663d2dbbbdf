"""Finite-horizon estimators of the Besicovitch and Weyl pseudometrics.

Every estimator has two entry points: one that takes a system and a pair of
points, and a ``*_from_distances`` kernel that takes the sequence
``d(T^i x, T^i y)`` directly. The system versions only produce that sequence
and hand it to the kernel.

A *system* here is anything with ``distances(x, y, n)``, ``metric(x, y)``,
``random_point(rng)``, ``random_near(x, delta, rng)`` and ``diameter``:
rotations, Sturmian and Thue-Morse subshifts, and skew products all qualify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import (
    RotationSystem,
    SturmianSystem,
    ThueMorseSystem,
    sturmian_fiber,
)
from .skew import SkewProduct


@dataclass(frozen=True)
class PseudometricEstimate:
    value: float
    horizon: int
    scheme: str  # "prefix" or "sliding"
    window: int | None = None
    stride: int | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ModulusProfile:
    eps: tuple[float, ...]
    delta: tuple[float, ...]  # delta-hat(eps), 0 when no grid value is admissible
    delta_grid: tuple[float, ...]
    pair_count: int
    horizon: int
    worst_pairs: tuple[tuple[float, float], ...]  # per eps: (d, d_B) of the pair that blocked the next delta

    def rows(self):
        return list(zip(self.eps, self.delta))


@dataclass(frozen=True)
class FiberDiameterProfile:
    samples: tuple[tuple[object, float], ...]
    inf_estimate: float

    @property
    def diameters(self) -> np.ndarray:
        return np.array([d for _, d in self.samples])


# ---------------------------------------------------------------------------
# kernels on explicit distance sequences


def checkpoints(n: int) -> list[int]:
    return sorted({max(1, n // 4), max(1, n // 2), n})


def _prefix_sums(d: np.ndarray) -> np.ndarray:
    # extended precision keeps window differences accurate on long constant runs
    out = np.zeros(d.size + 1, dtype=np.longdouble)
    np.cumsum(d, dtype=np.longdouble, out=out[1:])
    return out


def besicovitch_from_distances(d) -> PseudometricEstimate:
    d = np.asarray(d, dtype=float)
    n = d.size
    if n < 1:
        raise ValueError("need at least one distance")
    S = _prefix_sums(d)
    parts = {m: float(S[m] / m) for m in checkpoints(n)}
    return PseudometricEstimate(max(parts.values()), n, "prefix", diagnostics={"checkpoints": parts})


def weyl_from_distances(d, w: int | None = None) -> PseudometricEstimate:
    """Max over windows of length ``w`` at stride ``ceil(w/4)``.

    The Besicovitch checkpoints are prefix windows too and are always included,
    so the result dominates :func:`besicovitch_from_distances` exactly.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    if n < 1:
        raise ValueError("need at least one distance")
    w = max(1, n // 4) if w is None else int(w)
    if not 1 <= w <= n:
        raise ValueError(f"window {w} must satisfy 1 <= w <= n = {n}")
    stride = -(-w // 4)
    S = _prefix_sums(d)
    starts = np.arange(0, n - w + 1, stride)
    avgs = ((S[starts + w] - S[starts]) / w).astype(float)
    top = np.argsort(-avgs, kind="stable")[:3]
    prefix = {m: float(S[m] / m) for m in checkpoints(n)}
    value = max(float(avgs.max()), max(prefix.values()))
    diag = {
        "top_windows": [(int(starts[i]), float(avgs[i])) for i in top],
        "checkpoints": prefix,
        "n_windows": int(starts.size),
    }
    return PseudometricEstimate(value, n, "sliding", w, stride, diag)


def window_frequencies(hits, w: int) -> tuple[float, float]:
    hits = np.asarray(hits, dtype=np.int64)
    n = hits.size
    if not 1 <= w <= n:
        raise ValueError(f"window {w} must satisfy 1 <= w <= n = {n}")
    S = np.concatenate([[0], np.cumsum(hits)])
    freq = (S[w:] - S[:-w]) / w
    return float(freq.min()), float(freq.max())


# ---------------------------------------------------------------------------
# system-level estimators


def distance_sequence(system, x, y, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("horizon must be >= 1")
    return np.asarray(system.distances(x, y, n), dtype=float)


def besicovitch_estimate(system, x, y, n: int) -> PseudometricEstimate:
    return besicovitch_from_distances(distance_sequence(system, x, y, n))


def weyl_estimate(system, x, y, n: int, w: int | None = None) -> PseudometricEstimate:
    if w is not None and w > n:
        raise ValueError(f"window {w} exceeds horizon {n}")
    return weyl_from_distances(distance_sequence(system, x, y, n), w)


def _adversarial_pairs(system, rng, delta: float, count: int):
    """Thue-Morse pairs ``(x, shift of x-bar)`` with long central agreement."""
    if not isinstance(system, ThueMorseSystem):
        return []
    pairs = []
    for _ in range(count):
        x = system.random_point(rng)
        y = system.random_near(x, delta, rng, source=system.complement(x))
        if y != x:
            pairs.append((x, y))
    return pairs


def mean_equicontinuity_modulus(
    system,
    eps_grid,
    pair_budget: int = 400,
    horizon: int = 1000,
    delta_grid=None,
    rng: np.random.Generator | None = None,
    adversarial: bool = True,
) -> ModulusProfile:
    """Empirical modulus ``eps -> delta-hat(eps)`` of the identity ``d -> d_B``.

    Pairs are drawn for each grid ``delta`` (``x`` uniform, ``y`` uniform in the
    ``delta``-ball) and then pooled, so admissibility of ``delta`` is judged on
    every sampled pair closer than ``delta``.
    """
    eps = np.asarray(sorted(float(e) for e in eps_grid))
    if eps.size == 0:
        raise ValueError("eps_grid must be nonempty")
    if pair_budget < 100:
        raise ValueError("pair_budget must be at least 100")
    deltas = np.asarray(sorted(float(d) for d in (eps if delta_grid is None else delta_grid)))
    rng = np.random.default_rng(0) if rng is None else rng
    per = max(1, pair_budget // deltas.size)
    records = []  # (d, d_B)
    for delta in deltas:
        for _ in range(per):
            x = system.random_point(rng)
            y = system.random_near(x, float(delta), rng)
            records.append((system.metric(x, y), besicovitch_estimate(system, x, y, horizon).value))
        if adversarial:
            for x, y in _adversarial_pairs(system, rng, float(delta), max(1, per // 8)):
                records.append((system.metric(x, y), besicovitch_estimate(system, x, y, horizon).value))
    d_arr = np.array([r[0] for r in records])
    b_arr = np.array([r[1] for r in records])
    out, worst = [], []
    for e in eps:
        best, blocker = 0.0, (math.nan, math.nan)
        for delta in deltas:
            close = d_arr < delta
            if np.all(b_arr[close] < e):
                best = float(delta)
            else:
                i = int(np.flatnonzero(close & (b_arr >= e))[0])
                blocker = (float(d_arr[i]), float(b_arr[i]))
                break
        out.append(best)
        worst.append(blocker)
    # running minima from the top keep delta-hat nondecreasing in eps
    for i in range(len(out) - 2, -1, -1):
        out[i] = min(out[i], out[i + 1])
    return ModulusProfile(tuple(eps.tolist()), tuple(out), tuple(deltas.tolist()), len(records), horizon, tuple(worst))


def banach_visit_density(system, x, indicator, n: int, w: int) -> tuple[float, float]:
    """Min and max visit frequency of ``indicator`` over all length-``w`` windows of ``[0, n)``."""
    if not 1 <= w <= n:
        raise ValueError(f"window {w} must satisfy 1 <= w <= n = {n}")
    if isinstance(system, RotationSystem):
        orbit = system.orbit(x, n)
        hits = indicator(orbit)
    elif isinstance(system, SkewProduct):
        hits = indicator(*system.orbit(x, n))
    else:
        hits = indicator(system, x, n)
    hits = np.broadcast_to(np.asarray(hits, dtype=bool), (n,))
    return window_frequencies(hits, w)


# ---------------------------------------------------------------------------
# factor maps and fiber diameters


class SkewProjection:
    """``(z, y) -> z`` for a skew product; fibers are ``{z} x Y``."""

    def __init__(self, skew: SkewProduct):
        self.skew = skew

    def fiber(self, z, resolution: int):
        return self.skew.fiber(z, resolution)

    def metric(self, a, b) -> float:
        return self.skew.metric(a, b)

    def diameter(self, points) -> float:
        ys = np.array([p[1] for p in points])
        d = self.skew.cocycle.fiber_metric(ys[:, None], ys[None, :])
        return float(np.max(d))


class SturmianFactor:
    """Sturmian subshift onto its rotation; fibers have one or two points."""

    def __init__(self, system: SturmianSystem):
        self.system = system

    def fiber(self, z, resolution: int = 0):
        return list(sturmian_fiber(self.system, z).points)

    def metric(self, a, b) -> float:
        return self.system.metric(a, b)

    def diameter(self, points) -> float:
        if len(points) < 2:
            return 0.0
        return max(self.metric(a, b) for i, a in enumerate(points) for b in points[i + 1:])


class ThueMorseFactor:
    """Thue-Morse onto its quotient by complementation; fibers are ``{x, x-bar}``.

    Factor points are represented by a lift ``x``.
    """

    def __init__(self, system: ThueMorseSystem | None = None):
        self.system = system or ThueMorseSystem()

    def fiber(self, x, resolution: int = 0):
        return [x, self.system.complement(x)]

    def metric(self, a, b) -> float:
        return self.system.metric(a, b)

    def diameter(self, points) -> float:
        return max(self.metric(a, b) for i, a in enumerate(points) for b in points[i + 1:])


def fiber_diameter_profile(factor_map, z_samples, fiber_resolution: int = 64) -> FiberDiameterProfile:
    if not (hasattr(factor_map, "fiber") and hasattr(factor_map, "diameter")):
        raise TypeError(f"{type(factor_map).__name__} does not enumerate fibers")
    if fiber_resolution % 2:
        fiber_resolution += 1  # even nets contain antipodal pairs
    samples = []
    for z in z_samples:
        samples.append((z, factor_map.diameter(factor_map.fiber(z, fiber_resolution))))
    if not samples:
        raise ValueError("z_samples must be nonempty")
    return FiberDiameterProfile(tuple(samples), min(d for _, d in samples))
