"""Cocycles into fiber homeomorphism groups, skew and relative products.

Two fibers are supported: the circle ``R/Z`` acted on by piecewise-linear
orientation-preserving homeomorphisms, and the projective line (angles in
``[0, pi)``) acted on by SL(2,R).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernels
from .base import RotationSystem, circle_distance, wrap

SLOPE_FLOOR = 1e-12


class CocycleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# projective line


def projective_distance(a, b):
    """Angle metric on P^1 normalised to diameter 1."""
    d = np.abs(np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), np.pi))
    d = np.minimum(np.minimum(d, np.pi - d) / (np.pi / 2), 1.0)
    return float(d) if d.ndim == 0 else d


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def diagonal_matrix(lam: float) -> np.ndarray:
    return np.array([[lam, 0.0], [0.0, 1.0 / lam]])


def normalize_sl2(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(det <= 0):
        raise CocycleError("matrix is not orientation preserving")
    return m / np.sqrt(det)[..., None, None]


def mobius_act(m, theta):
    """Action of ``m`` (or a stack of matrices) on angles: ``angle(m (cos t, sin t)) mod pi``."""
    m = np.asarray(m, dtype=float)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if np.any(np.abs(det - 1.0) > 1e-6):
        raise CocycleError("Mobius action needs a determinant-one matrix")
    t = np.asarray(theta, dtype=float)
    x, y = np.cos(t), np.sin(t)
    u = m[..., 0, 0] * x + m[..., 0, 1] * y
    v = m[..., 1, 0] * x + m[..., 1, 1] * y
    out = np.mod(np.arctan2(v, u), np.pi)
    out = np.where(out >= np.pi, 0.0, out)
    return float(out) if out.ndim == 0 else out


def sl2_inverse(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    inv[..., 1, 1] = m[..., 0, 0]
    return inv


# ---------------------------------------------------------------------------
# piecewise-linear circle homeomorphisms


class CircleHomeo:
    """Orientation-preserving PL homeomorphism of ``R/Z``.

    Stored through its lift ``F``: knots ``0 = x_0 < ... < x_{K-1} < 1`` with
    values ``F(x_i)``, ``F(0)`` in ``[0, 1)`` and ``F(x + 1) = F(x) + 1``.
    """

    __slots__ = ("xs", "fs")

    def __init__(self, xs, fs, check: bool = True):
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if check:
            if xs.ndim != 1 or xs.shape != fs.shape or xs.size == 0:
                raise CocycleError("knots and values must be matching 1-d arrays")
            if xs[0] != 0.0 or np.any(np.diff(xs) <= 0) or xs[-1] >= 1.0:
                raise CocycleError("knots must start at 0 and increase inside [0, 1)")
            slopes = np.diff(np.append(fs, fs[0] + 1.0)) / np.diff(np.append(xs, 1.0))
            if np.any(slopes < SLOPE_FLOOR):
                raise CocycleError(f"slope underflow: min slope {slopes.min():.3e}")
        shift = math.floor(fs[0])
        self.xs = xs
        self.fs = fs - shift if shift else fs

    # constructors ------------------------------------------------------------
    @classmethod
    def identity(cls) -> "CircleHomeo":
        return cls([0.0], [0.0])

    @classmethod
    def rotation(cls, a: float) -> "CircleHomeo":
        return cls([0.0], [a % 1.0])

    @classmethod
    def from_lift(cls, xs, fs) -> "CircleHomeo":
        """From knots anywhere in ``[0, 1)``; adds a knot at 0 by interpolation."""
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        order = np.argsort(xs)
        xs, fs = xs[order], fs[order]
        if xs[0] != 0.0:
            f0 = np.interp(0.0, np.concatenate([[xs[-1] - 1.0], xs]), np.concatenate([[fs[-1] - 1.0], fs]))
            xs = np.concatenate([[0.0], xs])
            fs = np.concatenate([[f0], fs])
        return cls(xs, fs)

    @classmethod
    def random(cls, rng: np.random.Generator, breakpoints: int = 10, min_slope: float = 0.1) -> "CircleHomeo":
        xs = np.sort(np.concatenate([[0.0], rng.random(breakpoints - 1)]))
        widths = np.diff(np.append(xs, 1.0))
        w = rng.random(breakpoints) + min_slope
        inc = widths * w / np.sum(widths * w)
        fs = rng.random() + np.concatenate([[0.0], np.cumsum(inc)[:-1]])
        return cls(xs, fs)

    # evaluation ----------------------------------------------------------------
    @property
    def _ext(self):
        return np.append(self.xs, 1.0), np.append(self.fs, self.fs[0] + 1.0)

    def lift(self, x):
        """``F(x)`` for real ``x``."""
        x = np.asarray(x, dtype=float)
        fl = np.floor(x)
        xe, fe = self._ext
        return np.interp(x - fl, xe, fe) + fl

    def __call__(self, y):
        out = wrap(self.lift(y))
        return float(out) if np.ndim(out) == 0 else out

    @property
    def slopes(self) -> np.ndarray:
        xe, fe = self._ext
        return np.diff(fe) / np.diff(xe)

    @property
    def n_breakpoints(self) -> int:
        return int(self.xs.size)

    def inverse(self) -> "CircleHomeo":
        xe, fe = self._ext
        ys = fe[:-1]
        base = np.floor(ys)
        return CircleHomeo.from_lift(ys - base, self.xs - base)

    def compose(self, inner: "CircleHomeo") -> "CircleHomeo":
        """``self o inner`` (apply ``inner`` first)."""
        lo = inner.fs[0]
        g_knots = self.xs
        # knots of self lifted into the range of inner's lift over [0, 1)
        cand = np.concatenate([g_knots, g_knots + 1.0])
        cand = cand[(cand >= lo) & (cand < lo + 1.0)]
        pre = inner.inverse().lift(cand)
        pre = pre - np.floor(pre)
        xs = np.unique(np.concatenate([inner.xs, pre]))
        # merge knots closer than float resolution
        keep = np.concatenate([[True], np.diff(xs) > 1e-15])
        xs = xs[keep]
        xs = xs[xs < 1.0]
        fs = self.lift(inner.lift(xs))
        return CircleHomeo(xs, fs)

    def __matmul__(self, other: "CircleHomeo") -> "CircleHomeo":
        return self.compose(other)

    def sup_distance(self, other: "CircleHomeo") -> float:
        """Exact ``sup_y d(self(y), other(y))`` over the circle."""
        xs = np.unique(np.concatenate([self.xs, other.xs, [1.0]]))
        diff = self.lift(xs) - other.lift(xs)
        best = float(np.max(circle_distance(diff, 0.0)))
        lo, hi = np.minimum(diff[:-1], diff[1:]), np.maximum(diff[:-1], diff[1:])
        # a half-integer between the end values is attained inside the segment
        if np.any(np.floor(hi - 0.5) >= np.ceil(lo - 0.5)):
            best = 0.5
        return best

    def to_record(self) -> dict:
        return {"xs": [float(v).hex() for v in self.xs], "fs": [float(v).hex() for v in self.fs]}

    @classmethod
    def from_record(cls, rec: dict) -> "CircleHomeo":
        return cls([float.fromhex(v) for v in rec["xs"]], [float.fromhex(v) for v in rec["fs"]])

    def __repr__(self) -> str:
        return f"CircleHomeo(breakpoints={self.n_breakpoints}, F(0)={self.fs[0]:.6g})"


def homeo_compose(g: CircleHomeo, h: CircleHomeo) -> CircleHomeo:
    return g.compose(h)


def homeo_invert(g: CircleHomeo) -> CircleHomeo:
    return g.inverse()


# ---------------------------------------------------------------------------
# parameter maps z -> t in [0, 1]


@dataclass(frozen=True)
class CosineParameter:
    """``t(z) = (1 + cos 2 pi (z - phase)) / 2``; a smooth test parametrisation."""

    phase: float = 0.0
    exact = False

    def __call__(self, z):
        out = 0.5 * (1.0 + np.cos(2 * np.pi * (np.asarray(z, dtype=float) - self.phase)))
        return float(out) if np.ndim(out) == 0 else out

    def to_record(self) -> dict:
        return {"kind": "cosine", "phase": float(self.phase).hex()}


# ---------------------------------------------------------------------------
# cocycles


def _float_z(z, base: RotationSystem | None):
    if isinstance(z, (int, np.integer)) and not isinstance(z, bool):
        if base is None:
            raise CocycleError("exact base points need the base system")
        return base.to_float(int(z))
    return z


class Cocycle:
    """Continuous map ``z -> G_z`` into a homeomorphism group of the fiber."""

    fiber = "circle"
    exact = False  # True when z must be handled as an exact fixed-point point
    z_dependent = True

    def apply(self, z, y):
        raise NotImplementedError

    def apply_inverse(self, z, y):
        raise NotImplementedError

    def fiber_metric(self, a, b):
        return circle_distance(a, b) if self.fiber == "circle" else projective_distance(a, b)

    @property
    def fiber_diameter(self) -> float:
        return 0.5 if self.fiber == "circle" else 1.0

    def fiber_orbit(self, z_orbit: np.ndarray, y0: np.ndarray) -> np.ndarray:
        """Fiber coordinates along orbits.

        ``z_orbit`` has shape ``(S, L)`` (base points ``S^t z``), ``y0`` shape ``(S,)``;
        returns ``(S, L + 1)`` with column ``t`` the fiber point after ``t`` steps.
        """
        S, L = z_orbit.shape
        out = np.empty((S, L + 1))
        y = np.asarray(y0, dtype=float).copy()
        out[:, 0] = y
        for t in range(L):
            y = np.asarray(self.apply(z_orbit[:, t], y), dtype=float)
            out[:, t + 1] = y
        return out

    def to_record(self) -> dict:
        raise CocycleError(f"{type(self).__name__} is not serialisable")


class ConstantCocycle(Cocycle):
    """``G_z = h`` for all ``z``; ``h`` a CircleHomeo or a 2x2 SL(2,R) matrix."""

    z_dependent = False

    def __init__(self, value):
        if isinstance(value, CircleHomeo):
            self.fiber = "circle"
            self.homeo = value
            self.inverse_homeo = value.inverse()
            self.matrix = None
        else:
            self.fiber = "projective"
            self.matrix = normalize_sl2(np.asarray(value, dtype=float))
            self.homeo = None

    @classmethod
    def identity(cls, fiber: str = "circle") -> "ConstantCocycle":
        return cls(CircleHomeo.identity() if fiber == "circle" else np.eye(2))

    @classmethod
    def rotation(cls, beta: float) -> "ConstantCocycle":
        return cls(CircleHomeo.rotation(beta))

    def at(self, z=None):
        return self.homeo if self.fiber == "circle" else self.matrix

    def apply(self, z, y):
        if self.fiber == "circle":
            return self.homeo(y)
        return mobius_act(self.matrix, y)

    def apply_inverse(self, z, y):
        if self.fiber == "circle":
            return self.inverse_homeo(y)
        return mobius_act(sl2_inverse(self.matrix), y)

    def matrices(self, z) -> np.ndarray:
        if self.matrix is None:
            raise TypeError("circle-valued cocycle has no matrices")
        z = np.asarray(z, dtype=float)
        return np.broadcast_to(self.matrix, z.shape + (2, 2))

    def fiber_orbit(self, z_orbit, y0):
        S, L = z_orbit.shape
        if self.fiber == "circle" and self.homeo.n_breakpoints == 1:
            beta = self.homeo.fs[0]
            steps = np.arange(L + 1, dtype=float)
            out = np.asarray(y0, dtype=float)[:, None] + steps[None, :] * beta
            out -= np.floor(out)  # np.mod is several times slower
            out[out >= 1.0] = 0.0
            return out
        if self.fiber == "projective":
            m = self.matrix
            shape = (S, L)
            return _kernels.projective_orbit(
                np.broadcast_to(m[0, 0], shape), np.broadcast_to(m[0, 1], shape),
                np.broadcast_to(m[1, 0], shape), np.broadcast_to(m[1, 1], shape),
                np.asarray(y0, dtype=float),
            )
        return super().fiber_orbit(z_orbit, y0)

    def to_record(self) -> dict:
        if self.fiber == "circle":
            return {"kind": "constant", "fiber": "circle", "homeo": self.homeo.to_record()}
        return {"kind": "constant", "fiber": "projective", "matrix": [float(v).hex() for v in self.matrix.ravel()]}


class MobiusCocycle(Cocycle):
    """SL(2,R)-valued cocycle ``z -> R_{2 pi z} diag(lam, 1/lam)`` (Herman type)."""

    fiber = "projective"

    def __init__(self, lam: float, family: str = "herman"):
        if family != "herman":
            raise CocycleError(f"unknown Mobius family {family!r}")
        if lam <= 0:
            raise CocycleError("lam must be positive")
        self.lam = float(lam)
        self.family = family

    def matrices(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        c, s = np.cos(2 * np.pi * z), np.sin(2 * np.pi * z)
        lam = self.lam
        out = np.empty(z.shape + (2, 2))
        out[..., 0, 0] = c * lam
        out[..., 0, 1] = -s / lam
        out[..., 1, 0] = s * lam
        out[..., 1, 1] = c / lam
        return out

    def at(self, z):
        return self.matrices(float(z))

    def apply(self, z, y):
        return mobius_act(self.matrices(z), y)

    def apply_inverse(self, z, y):
        return mobius_act(sl2_inverse(self.matrices(z)), y)

    def fiber_orbit(self, z_orbit, y0):
        m = self.matrices(z_orbit)
        return _kernels.projective_orbit(
            np.ascontiguousarray(m[..., 0, 0]), np.ascontiguousarray(m[..., 0, 1]),
            np.ascontiguousarray(m[..., 1, 0]), np.ascontiguousarray(m[..., 1, 1]),
            np.asarray(y0, dtype=float),
        )

    def to_record(self) -> dict:
        return {"kind": "mobius", "family": self.family, "lam": self.lam.hex()}


class HomeoCocycle(Cocycle):
    """``H_z = h_{t(z)}`` for a parameter map ``t`` and a path ``t -> h_t``."""

    fiber = "circle"

    def __init__(self, parameter, path):
        self.parameter = parameter
        self.path = path
        self.exact = bool(getattr(parameter, "exact", False))

    def at(self, z) -> CircleHomeo:
        return self.path.at(float(self.parameter(z)))

    def apply(self, z, y):
        return self.path.apply(self.parameter(z), y)

    def apply_inverse(self, z, y):
        return self.path.apply_inverse(self.parameter(z), y)

    def to_record(self) -> dict:
        return {"kind": "homeo", "parameter": self.parameter.to_record(), "path": self.path.to_record()}


class CoboundaryCocycle(Cocycle):
    """``G = H_S^{-1} H``, i.e. ``G_z = H_{Sz}^{-1} o H_z``."""

    def __init__(self, H: Cocycle, base: RotationSystem):
        self.H = H
        self.base = base
        self.fiber = H.fiber
        self.exact = H.exact

    def _sz(self, z):
        if self.exact:
            if isinstance(z, np.ndarray):
                return [self.base.step(self.base.exact(v)) for v in z.ravel()]
            zi = z if isinstance(z, (int, np.integer)) else self.base.exact(z)
            return self.base.step(int(zi))
        return self.base.step(z)

    def _args(self, z):
        if self.exact and isinstance(z, np.ndarray):
            zs = [self.base.exact(v) for v in z.ravel()]
            return np.array(zs, dtype=object), np.array([self.base.step(v) for v in zs], dtype=object)
        if self.exact:
            zi = int(z) if isinstance(z, (int, np.integer)) else self.base.exact(z)
            return zi, self.base.step(zi)
        return z, self.base.step(z)

    def apply(self, z, y):
        z0, z1 = self._args(z)
        return self.H.apply_inverse(z1, self.H.apply(z0, y))

    def apply_inverse(self, z, y):
        z0, z1 = self._args(z)
        return self.H.apply_inverse(z0, self.H.apply(z1, y))

    def at(self, z) -> CircleHomeo:
        z0, z1 = self._args(z)
        return self.H.at(z1).inverse().compose(self.H.at(z0))

    def to_record(self) -> dict:
        b = self.base
        return {
            "kind": "coboundary",
            "base": {"numerator": str(b.numerator), "bits": b.bits, "trusted_bits": b.trusted_bits, "label": b.label},
            "H": self.H.to_record(),
        }


# ---------------------------------------------------------------------------
# serialisation

FORMAT_TAG = "skewlab-cocycle"
FORMAT_VERSION = 1


def rotation_from_record(rec: dict) -> RotationSystem:
    return RotationSystem(int(rec["numerator"]), int(rec["bits"]), int(rec["trusted_bits"]), rec.get("label", ""))


def cocycle_from_record(rec: dict) -> Cocycle:
    kind = rec["kind"]
    if kind == "constant":
        if rec["fiber"] == "circle":
            return ConstantCocycle(CircleHomeo.from_record(rec["homeo"]))
        m = np.array([float.fromhex(v) for v in rec["matrix"]]).reshape(2, 2)
        c = ConstantCocycle.__new__(ConstantCocycle)
        c.fiber, c.matrix, c.homeo = "projective", m, None
        return c
    if kind == "mobius":
        return MobiusCocycle(float.fromhex(rec["lam"]), rec["family"])
    if kind == "homeo":
        from .coboundary import parameter_from_record, path_from_record

        return HomeoCocycle(parameter_from_record(rec["parameter"]), path_from_record(rec["path"]))
    if kind == "coboundary":
        return CoboundaryCocycle(cocycle_from_record(rec["H"]), rotation_from_record(rec["base"]))
    raise CocycleError(f"unknown cocycle kind {kind!r}")


def dumps_cocycle(G: Cocycle) -> str:
    doc = {"format": FORMAT_TAG, "version": FORMAT_VERSION, "cocycle": G.to_record()}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_cocycle(text: str) -> Cocycle:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_TAG:
        raise CocycleError("not a skewlab cocycle file")
    if doc.get("version") != FORMAT_VERSION:
        raise CocycleError(f"unsupported cocycle file version {doc.get('version')}")
    return cocycle_from_record(doc["cocycle"])


def save_cocycle(G: Cocycle, path) -> Path:
    path = Path(path)
    path.write_text(dumps_cocycle(G), encoding="utf-8", newline="\n")
    return path


def load_cocycle(path) -> Cocycle:
    return loads_cocycle(Path(path).read_text(encoding="utf-8"))


def parse_cocycle(spec: str) -> Cocycle:
    """Cocycle from a short spec: ``identity``, ``rotation:B``, ``diag:L``,
    ``mobius-rotation:PHI``, ``matrix:a,b,c,d``, ``herman:L``, ``file:PATH``."""
    name, _, arg = spec.strip().partition(":")
    name = name.lower()
    try:
        if name == "identity":
            return ConstantCocycle.identity(arg or "circle")
        if name == "rotation":
            return ConstantCocycle.rotation(float(arg))
        if name == "diag":
            return ConstantCocycle(diagonal_matrix(float(arg)))
        if name == "mobius-rotation":
            return ConstantCocycle(rotation_matrix(float(arg)))
        if name == "matrix":
            vals = [float(v) for v in arg.split(",")]
            return ConstantCocycle(np.array(vals).reshape(2, 2))
        if name == "herman":
            return MobiusCocycle(float(arg))
        if name == "file":
            return load_cocycle(arg)
    except (ValueError, IndexError) as exc:
        raise CocycleError(f"bad cocycle spec {spec!r}: {exc}") from exc
    raise CocycleError(f"unknown cocycle spec {spec!r}")


# ---------------------------------------------------------------------------
# stepping


class SkewState(NamedTuple):
    z: float | int
    y: float


class RelState(NamedTuple):
    z: float | int
    y1: float
    y2: float


def _fiber_arg(G: Cocycle, base: RotationSystem, z):
    return z if G.exact else _float_z(z, base)


def skew_step(state: SkewState, G: Cocycle, base: RotationSystem) -> SkewState:
    """``T_G(z, y) = (S z, G_z(y))``."""
    zz = _fiber_arg(G, base, state.z)
    y = G.apply(zz, state.y)
    if not np.all(np.isfinite(y)):
        raise CocycleError(f"cocycle evaluation failed at z = {state.z}")
    return SkewState(base.step(state.z), float(y))


def relative_step(state: RelState, G: Cocycle, base: RotationSystem) -> RelState:
    """``(z, y1, y2) -> (S z, G_z(y1), G_z(y2))``."""
    zz = _fiber_arg(G, base, state.z)
    y = np.asarray(G.apply(zz, np.array([state.y1, state.y2])), dtype=float)
    if not np.all(np.isfinite(y)):
        raise CocycleError(f"cocycle evaluation failed at z = {state.z}")
    return RelState(base.step(state.z), float(y[0]), float(y[1]))


def cocycle_distance(G: Cocycle, G2: Cocycle, z_grid, y_grid) -> float:
    """Uniform distance on the grids, including the inverse maps."""
    z_grid = np.atleast_1d(np.asarray(z_grid, dtype=float))
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if z_grid.size == 0 or y.size == 0:
        raise ValueError("grids must be nonempty")
    best = 0.0
    for z in z_grid:
        z = float(z)
        d1 = G.fiber_metric(G.apply(z, y), G2.apply(z, y))
        d2 = G.fiber_metric(G.apply_inverse(z, y), G2.apply_inverse(z, y))
        best = max(best, float(np.max(d1)), float(np.max(d2)))
    return best


# ---------------------------------------------------------------------------
# skew product as a metric system


@dataclass(frozen=True)
class SkewProduct:
    """``T_G`` on ``Z x Y`` with the max metric; points are ``(z, y)`` pairs."""

    base: RotationSystem
    cocycle: Cocycle

    @property
    def diameter(self) -> float:
        return max(self.base.diameter, self.cocycle.fiber_diameter)

    @property
    def fiber_diameter(self) -> float:
        return self.cocycle.fiber_diameter

    def orbit(self, x, n: int):
        z, y = x
        zs = self.base.orbit(z, n)
        ys = self.cocycle.fiber_orbit(zs[None, :], np.array([float(y)]))[0, :n]
        return zs, ys

    def orbits(self, zs0, ys0, n: int):
        """Vectorised orbits for many starts: arrays of shape ``(S, n)``."""
        zs0 = np.asarray(zs0, dtype=float)
        zs = np.stack([self.base.orbit(z, n) for z in zs0]) if zs0.size else np.zeros((0, n))
        ys = self.cocycle.fiber_orbit(zs, np.asarray(ys0, dtype=float))[:, :n]
        return zs, ys

    def metric(self, x, y) -> float:
        return max(circle_distance(x[0], y[0]), float(self.cocycle.fiber_metric(x[1], y[1])))

    def distances(self, x, y, n: int) -> np.ndarray:
        zx, yx = self.orbit(x, n)
        zy, yy = self.orbit(y, n)
        return np.maximum(circle_distance(zx, zy), self.cocycle.fiber_metric(yx, yy))

    def random_point(self, rng: np.random.Generator):
        y = rng.random() * (1.0 if self.cocycle.fiber == "circle" else np.pi)
        return (float(rng.random()), float(y))

    def random_near(self, x, delta: float, rng: np.random.Generator):
        r = delta * (1 - 1e-12)
        z = wrap(x[0] + (2 * rng.random() - 1) * r)
        if self.cocycle.fiber == "circle":
            y = wrap(x[1] + (2 * rng.random() - 1) * r)
        else:
            y = float(np.mod(x[1] + (2 * rng.random() - 1) * r * np.pi / 2, np.pi))
        return (float(z), float(y))

    def fiber(self, z, resolution: int):
        """An evenly spaced net of the fiber ``{z} x Y``."""
        span = 1.0 if self.cocycle.fiber == "circle" else np.pi
        return [(float(z), span * i / resolution) for i in range(resolution)]

    def describe(self) -> dict:
        return {"system": "skew", "alpha": self.base.alpha, "fiber": self.cocycle.fiber}


@dataclass(frozen=True)
class RelativeProduct:
    """``(z, y1, y2) -> (S z, G_z y1, G_z y2)`` on ``Z x Y x Y``."""

    base: RotationSystem
    cocycle: Cocycle

    @property
    def fiber_diameter(self) -> float:
        return self.cocycle.fiber_diameter

    def orbit(self, x, n: int):
        z, y1, y2 = x
        zs = self.base.orbit(z, n)
        ys = self.cocycle.fiber_orbit(np.stack([zs, zs]), np.array([float(y1), float(y2)]))[:, :n]
        return zs, ys[0], ys[1]

    def metric(self, a, b) -> float:
        m = self.cocycle.fiber_metric
        return max(circle_distance(a[0], b[0]), float(m(a[1], b[1])), float(m(a[2], b[2])))

    def diagonal(self, x):
        """``(z, y) -> (z, y, y)``; the diagonal is invariant."""
        return (x[0], x[1], x[1])
