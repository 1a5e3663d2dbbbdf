"""Lyapunov exponents of SL(2,R) cocycles over a rotation and Furman's trichotomy.

The finite-time exponent at ``z`` is ``(1/(n+1)) log ||rho(S^n z) ... rho(z)||``
with the operator norm (largest singular value). Products are accumulated in
compiled code with the running norm factored out every 32 steps.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .base import RotationSystem, to_u64, u64_to_float
from .ergodicity import UEReport, default_grid, ue_gap
from .skew import Cocycle, ConstantCocycle, SkewProduct, projective_distance, sl2_inverse

RENORM_EVERY = 32
PROBES = (0.6236, 1.671, 2.718)  # generic angles spread over [0, pi)


class LyapunovError(ArithmeticError):
    """The renormalised product still left the floating-point range."""


def cocycle_matrices(rho: Cocycle, z) -> np.ndarray:
    """``rho(z)`` as a stack of 2x2 matrices with the shape of ``z``."""
    z = np.asarray(z, dtype=float)
    if hasattr(rho, "matrices"):
        return rho.matrices(z)
    if isinstance(rho, ConstantCocycle) and rho.matrix is not None:
        return np.broadcast_to(rho.matrix, z.shape + (2, 2))
    raise TypeError(f"{type(rho).__name__} is not SL(2,R)-valued")


def _orbit_block(base: RotationSystem, z64: np.ndarray, start: int, length: int) -> np.ndarray:
    idx = np.arange(start, start + length, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return u64_to_float(z64[:, None] + idx[None, :] * base.alpha_u64)


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_hat: float
    exponents: np.ndarray  # finite-time exponent per start
    starts: np.ndarray
    horizon: int
    renormalizations: int

    def to_csv(self, start_theta: float = 0.0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_z", "start_theta", "n", "exponent"])
        for z, e in zip(self.starts, self.exponents):
            w.writerow([f"{z:.12g}", f"{start_theta:.12g}", self.horizon, f"{e:.12g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "horizon": self.horizon,
            "renormalizations": self.renormalizations,
            "n_starts": int(self.starts.size),
            "exponent_min": float(self.exponents.min()),
            "exponent_max": float(self.exponents.max()),
        }


def finite_time_exponents(rho: Cocycle, base: RotationSystem, starts, n: int, chunk: int = 4096) -> np.ndarray:
    """``(1/(n+1)) log ||rho(S^n z) ... rho(z)||`` for each start ``z``."""
    if n < 1:
        raise ValueError("horizon must be >= 1")
    starts = np.atleast_1d(np.asarray(starts, dtype=float))
    S = starts.size
    z64 = to_u64(starts)
    state = np.tile(np.array([1.0, 0.0, 0.0, 1.0]), (S, 1))
    log_scale = np.zeros(S)
    counter = np.zeros(S, dtype=np.int64)
    total = n + 1
    for a in range(0, total, chunk):
        L = min(chunk, total - a)
        m = cocycle_matrices(rho, _orbit_block(base, z64, a, L))
        _kernels.norm_product(
            np.ascontiguousarray(m[..., 0, 0]), np.ascontiguousarray(m[..., 0, 1]),
            np.ascontiguousarray(m[..., 1, 0]), np.ascontiguousarray(m[..., 1, 1]),
            state, log_scale, counter, RENORM_EVERY,
        )
    if not (np.all(np.isfinite(state)) and np.all(np.isfinite(log_scale))):
        raise LyapunovError("matrix product overflowed despite renormalisation")
    top = _kernels.top_singular(state)
    if np.any(top <= 0):
        raise LyapunovError("matrix product underflowed to zero")
    # products of determinant-one matrices have norm >= 1; clip rounding below zero
    return np.maximum((log_scale + np.log(top)) / total, 0.0)


def lyapunov_estimate(rho: Cocycle, base: RotationSystem, z0, n: int) -> LyapunovEstimate:
    """Finite-time exponent at ``z0`` (or the mean over an array of starts)."""
    starts = np.atleast_1d(np.asarray(z0, dtype=float))
    ex = finite_time_exponents(rho, base, starts, n)
    return LyapunovEstimate(float(ex.mean()), ex, starts, n, (n + 1) // RENORM_EVERY)


def uniformity_gap(rho: Cocycle, base: RotationSystem, start_grid, n: int) -> float:
    grid = np.asarray(start_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("start grid must be nonempty")
    ex = finite_time_exponents(rho, base, grid, n)
    return float(ex.max() - ex.min())


# ---------------------------------------------------------------------------
# invariant directions


@dataclass(frozen=True)
class DirectionEstimate:
    z: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    diam_plus: np.ndarray  # projective diameter of the pushed probes
    diam_minus: np.ndarray

    @property
    def contraction_diag(self) -> np.ndarray:
        return np.maximum(self.diam_plus, self.diam_minus)

    @property
    def low_confidence(self) -> np.ndarray:
        return self.contraction_diag > 0.1


def _push(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Push the probes through ``mats[:, -1] ... mats[:, 0]``; returns (medoid angle, diameter)."""
    Z, L = mats.shape[:2]
    P = np.broadcast_to(np.eye(2), (Z, 2, 2)).copy()
    for t in range(L):
        P = mats[:, t] @ P
        P /= np.abs(P).max(axis=(1, 2), keepdims=True)
    probes = np.array(PROBES)
    v = P @ np.stack([np.cos(probes), np.sin(probes)])  # (Z, 2, 3)
    ang = np.arctan2(v[:, 1], v[:, 0]) % np.pi
    ang = np.where(ang >= np.pi, 0.0, ang)
    d = projective_distance(ang[:, :, None], ang[:, None, :])  # (Z, 3, 3)
    medoid = np.argmin(d.sum(axis=2), axis=1)
    return ang[np.arange(Z), medoid], d.max(axis=(1, 2))


def direction_field(rho: Cocycle, base: RotationSystem, zs, n_pullback: int = 50) -> DirectionEstimate:
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    z64 = to_u64(zs)
    # unstable direction: rho(S^-1 z) ... rho(S^-n z) applied to generic probes
    back = cocycle_matrices(rho, _orbit_block(base, z64, -n_pullback, n_pullback))
    up, dp = _push(back)
    # stable direction: rho(z)^-1 ... rho(S^(n-1) z)^-1, innermost factor first
    fwd = sl2_inverse(cocycle_matrices(rho, _orbit_block(base, z64, 0, n_pullback)))[:, ::-1]
    um, dm = _push(fwd)
    return DirectionEstimate(zs, up, um, dp, dm)


def invariant_directions(rho: Cocycle, base: RotationSystem, z, n_pullback: int = 50):
    """``(u_plus, u_minus, contraction_diag)`` at a single base point.

    Angles are in ``[0, pi)``. A diagonal above 0.1 marks the estimate as
    low-confidence; it is returned, not raised.
    """
    est = direction_field(rho, base, [float(z)], n_pullback)
    return float(est.u_plus[0]), float(est.u_minus[0]), float(est.contraction_diag[0])


def _max_jump(angles: np.ndarray) -> float:
    return float(np.max(projective_distance(angles, np.roll(angles, -1))))


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class FurmanConfig:
    lambda_threshold: float = 0.01
    lambda_horizon: int = 10**6
    lambda_starts: int = 8
    jump_threshold: float = 0.1
    direction_grid: int = 1000
    pullback: int = 50
    uniformity_horizon: int = 10**4
    uniformity_starts: int = 1000
    # Calibrated at n = 10**4 over 10**3 starts: the Herman cocycle lam = 2 gives 1.38e-3,
    # a uniformly hyperbolic perturbation of diag(2, 1/2) gives 2.9e-6.
    uniformity_threshold: float = 1e-4
    corroboration_horizon: int = 10**6
    corroboration_threshold: float = 0.05
    corroboration_grid: tuple[int, int] = (4, 4)

    def __post_init__(self):
        for name in ("lambda_horizon", "lambda_starts", "direction_grid", "pullback", "uniformity_horizon", "uniformity_starts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


# Regression baseline for rho(z) = R_{2 pi z} diag(2, 1/2) over the golden rotation.
HERMAN_BASELINE = {
    "lam": 2.0,
    "lambda_hat_1e7": 0.22314342262360293,  # 8 midpoint starts
    "uniformity_gap_1e4": 0.0013791086333519165,  # 1000 midpoint starts
}


@dataclass(frozen=True)
class TrichotomyReport:
    lambda_hat: float
    uniformity_gap: float | None
    direction_data: dict
    assigned_class: str
    thresholds: dict
    corroboration: dict | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _corroborate(rho, base, config: FurmanConfig) -> dict:
    nz, ny = config.corroboration_grid
    grid = default_grid(2, nz, ny, fiber_period=np.pi)
    rep: UEReport = ue_gap(SkewProduct(base, rho), grid, ["cos_z", "sin_z", "cos_y1", "sin_y1"], [config.corroboration_horizon])
    worst = float(rep.gaps[:, -1].max())
    return {"verdict": rep.verdict, "max_gap": worst, "horizon": config.corroboration_horizon, "consistent": worst < config.corroboration_threshold}


def furman_classify(rho: Cocycle, base: RotationSystem, config: FurmanConfig | None = None, corroborate: bool = True) -> TrichotomyReport:
    """Assign one of Case1, Case2a, Case2b or undetermined.

    Case1 needs a small exponent. Otherwise the direction fields on a base
    grid decide continuity, and the spread of finite-time exponents decides
    uniformity: continuous and uniform is Case2b, a confident jump or a large
    spread is Case2a.
    """
    config = config or FurmanConfig()
    thresholds = asdict(config)
    starts = (np.arange(config.lambda_starts) + 0.5) / config.lambda_starts
    lam = lyapunov_estimate(rho, base, starts, config.lambda_horizon).lambda_hat
    if lam < config.lambda_threshold:
        corr = _corroborate(rho, base, config) if corroborate else None
        return TrichotomyReport(lam, None, {}, "Case1", thresholds, corr)
    zs = np.arange(config.direction_grid) / config.direction_grid
    field_ = direction_field(rho, base, zs, config.pullback)
    confident = ~field_.low_confidence
    jp, jm = _max_jump(field_.u_plus), _max_jump(field_.u_minus)
    # a jump counts only when both endpoints are well contracted
    ok = confident & np.roll(confident, -1)
    jumps_p = projective_distance(field_.u_plus, np.roll(field_.u_plus, -1))
    jumps_m = projective_distance(field_.u_minus, np.roll(field_.u_minus, -1))
    confident_jump = bool(np.any(ok & ((jumps_p >= config.jump_threshold) | (jumps_m >= config.jump_threshold))))
    continuous = jp < config.jump_threshold and jm < config.jump_threshold
    ug_grid = (np.arange(config.uniformity_starts) + 0.5) / config.uniformity_starts
    gap = uniformity_gap(rho, base, ug_grid, config.uniformity_horizon)
    uniform = gap < config.uniformity_threshold
    if continuous and uniform:
        cls = "Case2b"
    elif confident_jump or not uniform:
        cls = "Case2a"
    else:
        cls = "undetermined"
    directions = {
        "u_plus_sample": [float(v) for v in field_.u_plus[:: max(1, zs.size // 16)]],
        "u_minus_sample": [float(v) for v in field_.u_minus[:: max(1, zs.size // 16)]],
        "u_plus_mean_angle": _axial_mean(field_.u_plus),
        "u_minus_mean_angle": _axial_mean(field_.u_minus),
        "max_jump_plus": jp,
        "max_jump_minus": jm,
        "low_confidence_fraction": float(field_.low_confidence.mean()),
        "grid": int(zs.size),
    }
    return TrichotomyReport(lam, gap, directions, cls, thresholds)


def _axial_mean(angles: np.ndarray) -> float:
    """Mean of axial data on ``[0, pi)`` via the doubled angle."""
    c, s = np.cos(2 * angles).mean(), np.sin(2 * angles).mean()
    m = (math.atan2(s, c) / 2) % math.pi
    return 0.0 if m >= math.pi else float(m)
