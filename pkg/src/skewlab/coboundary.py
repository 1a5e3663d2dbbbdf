"""Coboundaries ``G = H_S^{-1} H`` over a circle rotation that are close to the
identity yet force the relative product's averages of a chosen observable to
flatten.

Pipeline: pick an arc ``V`` on which the observable barely oscillates, build a
path ``t -> h_t`` of circle homeomorphisms with ``h_t^{-1}(y)`` in ``V`` for
most ``t``, build a Rokhlin tower and a slowly varying parameter
``theta: Z -> [0, 1]`` that spreads ``nu`` almost uniformly, and set
``H_z = h_{theta(z)}``.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .base import (
    Location,
    PrecisionError,
    RokhlinTower,
    RotationSystem,
    build_rokhlin_tower,
    to_u64,
    u64_to_float,
    wrap,
)
from .ergodicity import TestFunction, get_function, orbit_averages
from .skew import (
    CircleHomeo,
    CoboundaryCocycle,
    Cocycle,
    CocycleError,
    ConstantCocycle,
    CosineParameter,
    HomeoCocycle,
    RelativeProduct,
    cocycle_distance,
    rotation_from_record,
)

MIN_ARC = 2.0 ** -40


class CertificateError(RuntimeError):
    """The builder could not certify its output."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _arc(V) -> tuple[float, float]:
    v0, length = V
    v0, length = float(v0) % 1.0, float(length)
    if not length > MIN_ARC:
        raise CocycleError(f"arc length {length} is below representation resolution")
    if length > 1.0:
        raise CocycleError("arc length exceeds the circle")
    return v0, length


def expanding_homeo(V, eps: float) -> CircleHomeo:
    """PL homeomorphism sending ``V = (v0, v0 + L)`` onto ``(0, 1 - eps/2)``."""
    v0, length = _arc(V)
    end = v0 + length
    top = 1.0 - eps / 2.0
    if end >= 1.0:
        return CircleHomeo.from_lift([end - 1.0, v0], [top - 1.0, 0.0])
    return CircleHomeo.from_lift([v0, end], [0.0, top])


# ---------------------------------------------------------------------------
# condition (A) families


@dataclass(frozen=True)
class ConditionAFamily:
    """``h_j = R_{j/M} o g_V`` for ``j = 1..M``; ``h_j(Y - V)`` are short arcs."""

    V: tuple[float, float]
    eps: float
    M: int
    g: CircleHomeo
    bad_start: Fraction  # g(Y - V) = [bad_start, bad_start + bad_len]
    bad_len: Fraction

    @property
    def homeos(self) -> list[CircleHomeo]:
        return [CircleHomeo(self.g.xs, self.g.fs + j / self.M) for j in range(1, self.M + 1)]

    def violation_count(self, y) -> int:
        """``#{j : y in h_j(Y - V)}`` by exact lattice counting."""
        y = _frac(float(y))
        # y in [s + j/M, s + j/M + w] mod 1  <=>  j/M in [y - s - w, y - s] mod 1
        lo = (y - self.bad_start - self.bad_len) * self.M
        hi = (y - self.bad_start) * self.M
        if self.bad_len >= 1:
            return self.M
        return math.floor(hi) - math.ceil(lo) + 1

    def violation_fraction(self, y) -> float:
        return self.violation_count(y) / self.M

    def verify(self, n_grid: int = 1000) -> float:
        """Largest violating fraction over a grid of ``n_grid`` points (offset by half a cell)."""
        ys = (np.arange(n_grid) + 0.5) / n_grid
        return max(self.violation_fraction(y) for y in ys)


def condition_a_family(V, eps: float) -> ConditionAFamily:
    v0, length = _arc(V)
    if not 0 < eps:
        raise ValueError("eps must be positive")
    if length >= 1.0:
        # Y - V is the single point v0
        return ConditionAFamily((v0, length), float(eps), 1, CircleHomeo.identity(), _frac(v0), Fraction(0))
    if eps >= 1.0:
        # the bound is vacuous; any single homeomorphism will do
        start = (_frac(v0) + _frac(length)) % 1
        return ConditionAFamily((v0, length), float(eps), 1, CircleHomeo.identity(), start, 1 - _frac(length))
    M = math.ceil(4.0 / eps)
    g = expanding_homeo((v0, length), eps)
    half = _frac(eps) / 2
    return ConditionAFamily((v0, length), float(eps), M, g, 1 - half, half)


# ---------------------------------------------------------------------------
# the path t -> h_t


@dataclass(frozen=True)
class HomeoPath:
    """``h_t = R_{phi(t)} o g`` with ``phi`` piecewise linear in ``t``.

    The anchors are ``h_{t_i} = R_{phi_i} o g``; between anchors the lifts are
    interpolated linearly, which is exactly a rotation by the interpolated angle.
    """

    g: CircleHomeo
    t_knots: np.ndarray
    phi_knots: np.ndarray
    V: tuple[float, float]
    gamma: float
    family_eps: float
    M: int

    @property
    def g_inverse(self) -> CircleHomeo:
        return self.g.inverse()

    def phi(self, t):
        return np.interp(np.asarray(t, dtype=float), self.t_knots, self.phi_knots)

    def at(self, t: float) -> CircleHomeo:
        return CircleHomeo(self.g.xs, self.g.fs + float(self.phi(t)))

    def apply(self, t, y):
        return wrap(self.g.lift(y) + self.phi(t))

    def apply_inverse(self, t, y):
        return wrap(self._ginv.lift(np.asarray(y, dtype=float) - self.phi(t)))

    @property
    def _ginv(self) -> CircleHomeo:
        cached = self.__dict__.get("_ginv_cache")
        if cached is None:
            cached = self.g.inverse()
            object.__setattr__(self, "_ginv_cache", cached)
        return cached

    @property
    def phi_slope(self) -> float:
        return float(np.max(np.abs(np.diff(self.phi_knots) / np.diff(self.t_knots))))

    @property
    def lipschitz_inverse(self) -> float:
        return float(np.max(1.0 / self.g.slopes))

    def modulus(self, dt: float) -> float:
        """Bound on ``d(h_t^{-1} h_s, id)`` for ``|t - s| <= dt``."""
        return self.lipschitz_inverse * self.phi_slope * dt

    def eta(self, delta: float) -> float:
        """``|t - s| < eta`` implies ``d(h_t^{-1} h_s, id) < delta``."""
        return delta / (self.lipschitz_inverse * self.phi_slope)

    def violation_measure(self, y) -> np.ndarray:
        """``lambda{t : h_t^{-1}(y) not in V}`` for each ``y``, by interval arithmetic in ``t``.

        ``h_t^{-1}(y)`` leaves ``V`` exactly when ``phi(t)`` lies in the closed
        arc ``[y, y + e/2]`` (mod 1), ``e`` the family parameter.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.V[1] >= 1.0:
            return np.zeros_like(y)
        w = self.family_eps / 2.0
        t0, t1 = self.t_knots[:-1], self.t_knots[1:]
        p0, p1 = self.phi_knots[:-1], self.phi_knots[1:]
        lo, hi = np.minimum(p0, p1), np.maximum(p0, p1)
        total = np.zeros_like(y)
        for k in (-1.0, 0.0, 1.0):
            a = (y + k)[:, None]
            b = a + w
            flat = hi == lo
            inside = (lo >= a) & (lo <= b)
            overlap = np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)
            piece = np.where(flat, inside * (t1 - t0), overlap / np.where(flat, 1.0, hi - lo) * (t1 - t0))
            total += piece.sum(axis=1)
        return total

    def sampled_violation(self, y, n_t: int = 10_000) -> np.ndarray:
        """The same measure estimated on a ``t`` grid (cross-check)."""
        t = (np.arange(n_t) + 0.5) / n_t
        y = np.atleast_1d(np.asarray(y, dtype=float))
        pre = np.stack([self.apply_inverse(t, yy) for yy in y])
        d = (pre - self.V[0]) % 1.0
        return np.mean(~((d > 0) & (d < self.V[1])), axis=1)

    def verify(self, n_y: int = 1000) -> float:
        ys = (np.arange(n_y) + 0.5) / n_y
        return float(self.violation_measure(ys).max())

    def to_record(self) -> dict:
        return {
            "kind": "lemma-path",
            "V": [float(self.V[0]).hex(), float(self.V[1]).hex()],
            "gamma": float(self.gamma).hex(),
        }


def lemma_la_path(V, gamma: float) -> HomeoPath:
    """Path through the condition-(A) family with ``eps = gamma/2``.

    Holds ``h_j`` on ``[(j-1)/M + gamma/(4M), j/M - gamma/(4M)]`` and
    interpolates across the gaps between consecutive holding intervals.
    """
    v0, length = _arc(V)
    if not 0 < gamma:
        raise ValueError("gamma must be positive")
    fam = condition_a_family((v0, length), gamma / 2.0)
    M = fam.M
    if M == 1:
        t = np.array([0.0, 1.0])
        phi = np.array([1.0, 1.0])
    else:
        hold = gamma / (4.0 * M)
        t, phi = [0.0], [1.0 / M]
        for j in range(1, M):
            t += [j / M - hold, j / M + hold]
            phi += [j / M, (j + 1) / M]
        t.append(1.0)
        phi.append(1.0)
        t, phi = np.array(t), np.array(phi)
    return HomeoPath(fam.g, t, phi, (v0, length), float(gamma), fam.eps, M)


# ---------------------------------------------------------------------------
# theta over a Rokhlin tower


class ThetaMap:
    """``theta~`` (CDF of ``K`` copied up the tower columns) and its average ``theta``.

    On the block-start levels covered by ``K`` (offset ``u`` inside
    ``[m, w - m)``), ``theta~ = (cdf + u - m) / |K|``; inside the margins it
    ramps linearly to 0 at the level ends, and it is 0 on leftover levels.
    ``theta~`` is constant along each block of ``N**2`` levels, and
    ``theta(z) = (1/N) sum_{i<N} theta~(S^-i z)``.
    Points are exact numerators of the tower's rotation (floats are converted).
    """

    exact = True

    def __init__(self, tower: RokhlinTower, N: int | None = None):
        if N is not None and N != tower.N:
            raise ValueError(f"tower was built for N = {tower.N}, not {N}")
        self.tower = tower
        self.N = tower.N
        self.NN = tower.N * tower.N
        self.rotation = tower.rotation
        self.K = tower.K_length

    # theta~ ---------------------------------------------------------------
    def block_value(self, t: int, block: int, u: int) -> float:
        T = self.tower
        if block >= T.n_blocks[t]:
            return 0.0
        i = T.arc_index[(t, block)]
        m, w = T.margins[t], T.base_widths[t]
        cdf = T.arc_cdf[i]
        if u < m:
            return (cdf * u) / (m * self.K)
        if u >= w - m:
            return ((cdf + w - 2 * m) * (w - u)) / (m * self.K)
        return (cdf + u - m) / self.K

    def level_value(self, loc: Location) -> float:
        return self.block_value(loc.tower, loc.level // self.NN, loc.offset)

    def column_sum(self, t: int, u: int, lo: int, hi: int) -> float:
        """``sum theta~`` over levels ``lo..hi`` (inclusive) of one column."""
        total, level = 0.0, lo
        while level <= hi:
            b = level // self.NN
            end = min(hi, (b + 1) * self.NN - 1)
            total += (end - level + 1) * self.block_value(t, b, u)
            level = end + 1
        return total

    def _exact(self, z) -> int:
        return self.rotation.exact(z)

    def theta_tilde(self, z) -> float:
        return self.level_value(self.tower.locate(self._exact(z)))

    def theta_exact(self, z: int) -> float:
        T, N = self.tower, self.N
        loc = T.locate(z)
        t, j, u = loc.tower, loc.level, loc.offset
        total = self.column_sum(t, u, max(0, j - N + 1), j)
        if j < N - 1:
            # the rest of the window lies in the column below the base
            prev = (z - (j + 1) * self.rotation.numerator) % self.rotation.modulus
            p = T.locate(prev)
            h = T.heights[p.tower]
            if p.level != h - 1:  # pragma: no cover - partition identity
                raise PrecisionError("preimage of the tower base is not a top level")
            total += self.column_sum(p.tower, p.offset, h - (N - 1 - j), h - 1)
        return total / N

    def __call__(self, z):
        if isinstance(z, np.ndarray):
            return np.array([self.theta_exact(self._exact(v)) for v in z.ravel()], dtype=float).reshape(z.shape)
        if isinstance(z, (list, tuple)):
            return np.array([self.theta_exact(self._exact(v)) for v in z], dtype=float)
        return self.theta_exact(self._exact(z))

    # checks ---------------------------------------------------------------
    def pushforward_distance(self) -> float:
        """Kolmogorov distance between ``theta~_* (nu|K normalised)`` and Lebesgue.

        ``theta~`` has slope ``1/|K|`` on each arc of ``K``, so the push-forward
        is Lebesgue exactly when the arcs, taken in CDF order, map onto
        consecutive intervals. Each arc is re-derived from its tower position
        and the largest endpoint mismatch is returned (0 for a correct map).
        """
        T = self.tower
        inv = {idx: key for key, idx in T.arc_index.items()}
        worst, acc = Fraction(0), 0
        for i, (s, length) in enumerate(T.arcs):
            t, b = inv[i]
            m = T.margins[t]
            if T.point_of(Location(t, b * self.NN, m)) != s or length != T.base_widths[t] - 2 * m:
                return 1.0
            worst = max(worst, abs(Fraction(T.arc_cdf[i], self.K) - Fraction(acc, self.K)))
            acc += length
        worst = max(worst, abs(Fraction(acc, self.K) - 1))
        return float(worst)

    def max_step(self, z_grid) -> float:
        """``max |theta(S z) - theta(z)|`` over exact grid points."""
        A, Mod = self.rotation.numerator, self.rotation.modulus
        worst = 0.0
        for z in z_grid:
            zi = self._exact(z)
            worst = max(worst, abs(self.theta_exact((zi + A) % Mod) - self.theta_exact(zi)))
        return worst

    def to_record(self) -> dict:
        r = self.rotation
        return {
            "kind": "tower-theta",
            "rotation": {"numerator": str(r.numerator), "bits": r.bits, "trusted_bits": r.trusted_bits, "label": r.label},
            "N": self.N,
            "gamma": str(self.tower.gamma),
        }


def build_theta(tower: RokhlinTower, base: RotationSystem, N: int) -> ThetaMap:
    if N < 2:
        raise ValueError("N must be >= 2")
    if tower.rotation != base:
        raise ValueError("tower was built over a different rotation")
    if tower.height != N * N:
        raise ValueError(f"tower height {tower.height} does not equal N**2 = {N * N}")
    return ThetaMap(tower, N)


# ---------------------------------------------------------------------------
# records


def path_from_record(rec: dict) -> HomeoPath:
    if rec.get("kind") != "lemma-path":
        raise CocycleError(f"unknown path kind {rec.get('kind')!r}")
    V = (float.fromhex(rec["V"][0]), float.fromhex(rec["V"][1]))
    return lemma_la_path(V, float.fromhex(rec["gamma"]))


def parameter_from_record(rec: dict):
    kind = rec.get("kind")
    if kind == "cosine":
        return CosineParameter(float.fromhex(rec["phase"]))
    if kind == "tower-theta":
        rot = rotation_from_record(rec["rotation"])
        tower = build_rokhlin_tower(rot, int(rec["N"]), Fraction(rec["gamma"]))
        return ThetaMap(tower, int(rec["N"]))
    raise CocycleError(f"unknown parameter kind {kind!r}")


# ---------------------------------------------------------------------------
# builder


def oscillation(f: TestFunction, V, n_z: int = 32, n_v: int = 17) -> float:
    """``max_z (max - min)`` of ``f(z, v1, v2)`` over ``v1, v2`` in the closed arc ``V``."""
    v0, length = V
    vs = (v0 + length * np.linspace(0.0, 1.0, n_v)) % 1.0
    zs = np.arange(n_z) / n_z
    v1, v2 = np.meshgrid(vs, vs, indexing="ij")
    vals = f(zs[:, None, None], v1[None], v2[None])
    vals = np.broadcast_to(vals, (n_z, n_v, n_v))
    return float(np.max(vals.max(axis=(1, 2)) - vals.min(axis=(1, 2))))


def find_arc(f: TestFunction, bound: float, centres: int = 64, max_depth: int = 30):
    """Largest dyadic-length arc, centred on a ``centres``-point grid, with oscillation below ``bound``."""
    for depth in range(1, max_depth + 1):
        length = 2.0 ** -depth
        for i in range(centres):
            c = i / centres
            V = ((c - length / 2) % 1.0, length)
            if oscillation(f, V) < bound:
                return V
    raise CertificateError("f too oscillatory in fiber: no arc meets the oscillation bound")


def _unit_function(f) -> TestFunction:
    f = get_function(f) if isinstance(f, str) else f
    if not isinstance(f, TestFunction):
        f = TestFunction(getattr(f, "__name__", "f"), lambda z, a, b, _f=f: _f(z, a, b), unit=True)
    return f


def integral_deviation(H: HomeoCocycle, f: TestFunction, V, n_z: int = 1000, n_y: int = 64):
    """Quadrature of ``|int f(z, H_z^-1 y1, H_z^-1 y2) dnu - c|`` maximised over a fiber grid.

    ``c = int f(z, v, v) dnu`` with ``v`` the centre of ``V``. Returns ``(deviation, c)``.
    """
    zs = (np.arange(n_z) + 0.5) / n_z
    ys = (np.arange(n_y) + 0.5) / n_y
    thetas = np.asarray(H.parameter(zs), dtype=float)
    pre = np.stack([H.path.apply_inverse(th, ys) for th in thetas])  # (n_z, n_y)
    vals = f(zs[:, None, None], pre[:, :, None], pre[:, None, :])
    mean = np.broadcast_to(vals, (n_z, n_y, n_y)).mean(axis=0)
    v = (V[0] + V[1] / 2) % 1.0
    c = float(np.mean(f(zs, np.full_like(zs, v), np.full_like(zs, v))))
    return float(np.max(np.abs(mean - c))), c


@dataclass
class CoboundaryResult:
    H: HomeoCocycle
    G: CoboundaryCocycle
    report: dict

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"])


def certify(G: CoboundaryCocycle, f, eps: float, delta: float, n_z: int = 1000, n_y: int = 1000, n_quad_z: int = 1000, n_quad_y: int = 64) -> dict:
    """Both certificate values for a coboundary; re-running on a reloaded cocycle reproduces them."""
    f = _unit_function(f)
    H = G.H
    zs = (np.arange(n_z) + 0.5) / n_z
    ys = (np.arange(n_y) + 0.5) / n_y
    dist = cocycle_distance(G, ConstantCocycle.identity(), zs, ys)
    dev, c = integral_deviation(H, f, H.path.V, n_quad_z, n_quad_y)
    return {
        "distance_to_identity": dist,
        "distance_bound": H.path.modulus(1.0 / H.parameter.N),
        "integral_deviation": dev,
        "c": c,
        "distance_passed": dist < delta,
        "integral_passed": dev < eps,
        "grids": {"distance": [n_z, n_y], "quadrature": [n_quad_z, n_quad_y, n_quad_y]},
    }


def build_coboundary(base: RotationSystem, f, eps: float, delta: float, **grids) -> CoboundaryResult:
    """Coboundary ``G = H_S^{-1} H`` with ``d(G, Id) < delta`` targeting ``f`` at level ``eps``.

    Raises :class:`CertificateError` if the distance certificate fails.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    f = _unit_function(f)
    V = find_arc(f, eps / 2.0)
    gamma = eps / 16.0
    path = lemma_la_path(V, gamma)
    eta = path.eta(delta)
    N = math.floor(1.0 / min(eta / 2.0, gamma)) + 1
    tower = build_rokhlin_tower(base, N, Fraction(gamma).limit_denominator(1 << 40))
    theta = build_theta(tower, base, N)
    H = HomeoCocycle(theta, path)
    G = CoboundaryCocycle(H, base)
    cert = certify(G, f, eps, delta, **grids)
    report = {
        "inputs": {
            "eps": eps,
            "delta": delta,
            "alpha": base.alpha,
            "alpha_label": base.label,
            "alpha_bits": base.bits,
            "function": f.name,
        },
        "V": list(V),
        "gamma": gamma,
        "M": path.M,
        "eta": eta,
        "N": N,
        "tower": {
            "k": tower.k,
            "q_k": tower.heights[0],
            "q_k_minus_1": tower.heights[1],
            "arcs": len(tower.arcs),
            "covered_measure": float(tower.covered_measure),
        },
        "certificates": cert,
        "passed": bool(cert["distance_passed"] and cert["integral_passed"]),
    }
    if not cert["distance_passed"]:
        raise CertificateError(f"d(G, Id) = {cert['distance_to_identity']:.6g} is not below delta = {delta}")
    return CoboundaryResult(H, G, report)


def certificate_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# membership in E_{f, eps}


@dataclass(frozen=True)
class MembershipReport:
    schedule: tuple[int, ...]
    deviations: tuple[float, ...]
    medians: tuple[float, ...]
    approximation: tuple[float, ...]  # bound on the quadrature error of each average
    best_n: int
    best_deviation: float
    eps: float
    member: bool
    mode: str
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "deviations": list(self.deviations),
            "medians": list(self.medians),
            "approximation": list(self.approximation),
            "best_n": self.best_n,
            "best_deviation": self.best_deviation,
            "eps": self.eps,
            "member": self.member,
            "mode": self.mode,
            "grid": self.grid,
        }


def _tower_coboundary(G) -> bool:
    return (
        isinstance(G, CoboundaryCocycle)
        and isinstance(G.H, HomeoCocycle)
        and isinstance(G.H.parameter, ThetaMap)
        and isinstance(G.H.path, HomeoPath)
    )


def theta_runs(theta: ThetaMap, z: int, n_max: int):
    """Runs ``(start, length, value)`` of ``theta~(S^k z)`` for ``k`` from ``-(N-1)`` to ``n_max``."""
    T, N, NN = theta.tower, theta.N, theta.NN
    A, Mod = theta.rotation.numerator, theta.rotation.modulus
    k = -(N - 1)
    loc = T.locate((z + k * A) % Mod)
    t, j, u = loc.tower, loc.level, loc.offset
    runs = []
    while k <= n_max:
        b = j // NN
        h = T.heights[t]
        end = (b + 1) * NN if b < T.n_blocks[t] else h
        runs.append((k, end - j, theta.block_value(t, b, u)))
        k += end - j
        if end == h:
            nxt = T.next_column(Location(t, h - 1, u))
            t, j, u = nxt.tower, 0, nxt.offset
        else:
            j = end
    return runs


class _RunSeries:
    """``theta_k`` as the length-``N`` moving average of piecewise constant runs."""

    def __init__(self, runs, N: int):
        self.starts = [r[0] for r in runs]
        self.runs = runs
        self.N = N

    def theta(self, k: int) -> float:
        lo, hi = k - self.N + 1, k
        i = bisect.bisect_right(self.starts, lo) - 1
        total = 0.0
        while i < len(self.runs) and self.runs[i][0] <= hi:
            s, length, v = self.runs[i]
            a, b = max(s, lo), min(s + length - 1, hi)
            if b >= a:
                total += (b - a + 1) * v
            i += 1
        return total / self.N

    def pieces(self, n: int, extra=()):
        """Affine pieces ``(k0, length, theta(k0), theta(k0 + length - 1))`` covering ``0..n``.

        ``extra`` adds cut points, so that every ``0..m`` with ``m + 1`` in
        ``extra`` is a union of leading pieces.
        """
        cuts = {0, n + 1}
        cuts.update(c for c in extra if 0 < c <= n)
        for s in self.starts:
            for c in (s, s + self.N):
                if 0 < c <= n:
                    cuts.add(c)
        cuts = sorted(cuts)
        return [(a, b - a, self.theta(a), self.theta(b - 1)) for a, b in zip(cuts[:-1], cuts[1:])]


def _is_ramp(piece) -> bool:
    _, length, a, b = piece
    return a != b and length > 2


def _node_count(piece, ramp_nodes: int = 1) -> int:
    _, length, a, b = piece
    if _is_ramp(piece):
        return ramp_nodes
    return length if (length <= 2 and a != b) else 1


def _nodes(pieces, ramp_nodes: int = 1):
    """Quadrature nodes ``(theta, weight, k)`` and the total weight on sloped pieces."""
    th, wt, ks = [], [], []
    ramp = 0
    for k0, length, a, b in pieces:
        if not _is_ramp((k0, length, a, b)):
            if length <= 2 and a != b:
                th += [a, b][:length]
                wt += [1.0] * length
                ks += [k0, k0 + 1][:length]
            else:
                th.append(a)
                wt.append(float(length))
                ks.append(k0)
            continue
        ramp += length
        for q in range(ramp_nodes):
            x = (q + 0.5) / ramp_nodes
            th.append(a + (b - a) * x)
            wt.append(length / ramp_nodes)
            ks.append(k0 + int(x * (length - 1)))
    return np.array(th), np.array(wt), np.array(ks, dtype=np.int64), ramp


def _run_averages(G: CoboundaryCocycle, funcs, z: float, y_pairs: np.ndarray, schedule, z_nodes: int = 256):
    """``A_n f`` at ``(z, y1, y2)`` for every function, pair and ``n`` via the tower runs.

    Returns averages of shape ``(F, H, P)`` and per-``n`` error bounds.
    """
    theta, path, base = G.H.parameter, G.H.path, G.base
    zi = base.exact(z)
    n_max = max(schedule)
    series = _RunSeries(theta_runs(theta, zi, n_max), theta.N)
    w = path.apply(theta.theta_exact(zi), y_pairs)  # H_z(y_i), shape (P, 2)
    pieces = series.pieces(n_max, extra=[n + 1 for n in schedule])
    ths, wts, ks, _ = _nodes(pieces)
    counts = [_node_count(p) for p in pieces]
    k0 = np.repeat([p[0] for p in pieces], counts)
    ramp_len = np.array([p[1] if _is_ramp(p) else 0 for p in pieces])
    piece_k0 = np.array([p[0] for p in pieces])
    y1 = path.apply_inverse(ths[:, None], w[None, :, 0])
    y2 = path.apply_inverse(ths[:, None], w[None, :, 1])
    long = wts > z_nodes
    zq = (np.arange(z_nodes) + 0.5) / z_nodes
    with np.errstate(over="ignore"):
        zk = u64_to_float(to_u64(base.to_float(zi)) + ks.astype(np.uint64) * base.alpha_u64)
    out, exact = [], True
    for f in funcs:
        if f.z_independent:
            vals = f(np.zeros_like(y1), y1, y2)
        else:
            vals = np.empty_like(y1)
            vals[~long] = f(zk[~long, None], y1[~long], y2[~long])
            if np.any(long):
                # a long constant run samples S^k z densely: replace the orbit sum by the nu-integral
                vals[long] = f(zq[None, None, :], y1[long][..., None], y2[long][..., None]).mean(axis=-1)
                exact = False  # no rigorous bound for the z-quadrature
        contrib = wts[:, None] * vals
        out.append([contrib[k0 <= n].sum(axis=0) / (n + 1) for n in schedule])
    approx = [int(ramp_len[piece_k0 <= n].sum()) / (n + 1) if exact else math.nan for n in schedule]
    return np.array(out), approx


def default_tower_schedule(G: CoboundaryCocycle) -> tuple[int, ...]:
    """``N**2`` and ``4**i q`` for ``i < 4``, ``q`` the taller tower height."""
    T = G.H.parameter.tower
    return (T.height,) + tuple(4**i * T.heights[0] for i in range(4))


def tower_averages(G: CoboundaryCocycle, starts, funcs, schedule):
    """Relative-product averages ``(F, S, H)`` at ``(z, y1, y2)`` starts with ``n + 1`` terms each.

    Starts sharing a base point share one walk along the tower.
    """
    if not _tower_coboundary(G):
        raise ValueError("run mode needs a coboundary built over a Rokhlin tower")
    funcs = [_unit_function(f) for f in funcs]
    starts = np.asarray(starts, dtype=float).reshape(-1, 3)
    schedule = tuple(int(n) for n in schedule)
    out = np.empty((len(funcs), starts.shape[0], len(schedule)))
    approx = np.zeros(len(schedule))
    for z in np.unique(starts[:, 0]):
        idx = np.flatnonzero(starts[:, 0] == z)
        avg, err = _run_averages(G, funcs, float(z), starts[idx, 1:], schedule)
        out[:, idx, :] = avg.transpose(0, 2, 1)
        approx = np.maximum(approx, err)
    return out, approx


def verify_E_membership(
    G: Cocycle,
    f,
    eps: float,
    base: RotationSystem,
    horizon_schedule=None,
    n_z: int = 32,
    n_y: int = 16,
    mode: str = "auto",
    workers: int = 1,
) -> MembershipReport:
    """Sup over a start grid of ``|A_n f - c*|``, ``c*`` the grid median, for each scheduled ``n``.

    ``A_n f = (1/(n+1)) sum_{k<=n} f(T~_G^k (z, y1, y2))``. Coboundaries built
    over a tower are evaluated by walking tower columns: along an orbit the
    fiber coordinates are ``h_{theta(S^k z)}^{-1}(H_z y)`` and ``theta`` is
    piecewise affine in ``k``, so constant stretches are summed exactly and
    the short sloped stretches by a midpoint rule whose error is reported.
    """
    f = _unit_function(f)
    zs = np.arange(n_z) / n_z
    ys = (np.arange(n_y) + 0.5) / n_y
    pairs = np.stack(np.meshgrid(ys, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    use_runs = mode == "runs" or (mode == "auto" and _tower_coboundary(G))
    if use_runs:
        if not _tower_coboundary(G):
            raise ValueError("run mode needs a coboundary built over a Rokhlin tower")
        schedule = tuple(sorted(int(n) for n in (horizon_schedule or default_tower_schedule(G))))
        grid = np.column_stack([np.repeat(zs, len(pairs)), np.tile(pairs, (n_z, 1))])
        a, approx = tower_averages(G, grid, [f], schedule)
        avgs = a[0].T  # (H, S)
        label = "tower-runs"
    else:
        schedule = tuple(sorted(int(n) for n in (horizon_schedule or (100, 1000, 10000))))
        period = 1.0 if G.fiber == "circle" else np.pi
        grid = np.column_stack([np.repeat(zs, len(pairs)), np.tile(pairs, (n_z, 1)) * period])
        a, _ = orbit_averages(RelativeProduct(base, G), grid, [f], [n + 1 for n in schedule], workers=workers)
        avgs = a[0].T
        approx = np.zeros(len(schedule))
        label = "direct"
    med = np.median(avgs, axis=1)
    dev = np.max(np.abs(avgs - med[:, None]), axis=1)
    i = int(np.argmin(dev))
    return MembershipReport(
        schedule,
        tuple(float(v) for v in dev),
        tuple(float(v) for v in med),
        tuple(float(v) for v in approx),
        schedule[i],
        float(dev[i]),
        float(eps),
        bool(dev[i] < eps),
        label,
        {"n_z": n_z, "n_y": n_y},
    )
