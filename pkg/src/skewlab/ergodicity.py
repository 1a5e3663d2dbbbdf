"""Birkhoff averages, the unique-ergodicity gap and the isomorphic-extension test.

Systems accepted: a :class:`RotationSystem` (points ``z``), a
:class:`SkewProduct` (points ``(z, y)``) and a :class:`RelativeProduct`
(points ``(z, y1, y2)``). Dictionary functions are evaluated as
``f(z, y1, y2)`` with fiber coordinates rescaled to ``[0, 1)`` (projective
angles are divided by pi); on a skew product ``y1 = y2 = y``, which is the
diagonal embedding of ``X`` into its relative product.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .base import RotationSystem, to_u64, u64_to_float
from .skew import Cocycle, RelativeProduct, SkewProduct

TWO_PI = 2.0 * np.pi
VERDICTS = ("uniquely-ergodic-evidence", "not-uniquely-ergodic", "inconclusive")
ISO_VERDICTS = {
    "uniquely-ergodic-evidence": "isomorphic-evidence",
    "not-uniquely-ergodic": "not-isomorphic",
    "inconclusive": "inconclusive",
}


@dataclass(frozen=True)
class TestFunction:
    """A continuous observable ``f(z, y1, y2)``.

    ``uses`` lists the coordinates it depends on; ``unit`` marks values in
    ``[0, 1]`` (required by the coboundary builder).
    """

    __test__ = False  # not a pytest class

    name: str
    fn: Callable
    uses: frozenset = frozenset({"z", "y1", "y2"})
    unit: bool = False

    def __call__(self, z, y1=None, y2=None):
        z = np.asarray(z, dtype=float)
        y1 = np.zeros_like(z) if y1 is None else np.asarray(y1, dtype=float)
        y2 = y1 if y2 is None else np.asarray(y2, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(z, y1, y2), dtype=float), np.broadcast(z, y1, y2).shape)

    @property
    def z_independent(self) -> bool:
        return "z" not in self.uses

    @property
    def separates_diagonal(self) -> bool:
        return {"y1", "y2"} <= self.uses


def _tf(name, fn, uses, unit=False):
    return TestFunction(name, fn, frozenset(uses), unit)


DICTIONARY: dict[str, TestFunction] = {
    f.name: f
    for f in [
        _tf("cos_z", lambda z, a, b: np.cos(TWO_PI * z), {"z"}),
        _tf("sin_z", lambda z, a, b: np.sin(TWO_PI * z), {"z"}),
        _tf("cos_y1", lambda z, a, b: np.cos(TWO_PI * a), {"y1"}),
        _tf("sin_y1", lambda z, a, b: np.sin(TWO_PI * a), {"y1"}),
        _tf("cos_y2", lambda z, a, b: np.cos(TWO_PI * b), {"y2"}),
        _tf("sin_y2", lambda z, a, b: np.sin(TWO_PI * b), {"y2"}),
        _tf("cos_diff", lambda z, a, b: np.cos(TWO_PI * (a - b)), {"y1", "y2"}),
        _tf("sin_diff", lambda z, a, b: np.sin(TWO_PI * (a - b)), {"y1", "y2"}),
        _tf("diag_cosine", lambda z, a, b: 0.5 * (1.0 + np.cos(TWO_PI * (a - b))), {"y1", "y2"}, True),
        _tf("cos_z_diff", lambda z, a, b: 0.5 * (1.0 + np.cos(TWO_PI * z) * np.cos(TWO_PI * (a - b))), {"z", "y1", "y2"}, True),
        _tf("constant", lambda z, a, b: np.full_like(z, 0.5), set(), True),
    ]
}

BASE_FUNCTIONS = ("cos_z", "sin_z")
SKEW_FUNCTIONS = ("cos_z", "sin_z", "cos_y1", "sin_y1")
RELATIVE_FUNCTIONS = ("cos_z", "sin_z", "cos_y1", "sin_y1", "cos_y2", "sin_y2", "cos_diff", "sin_diff")


def get_function(f) -> TestFunction:
    if isinstance(f, TestFunction):
        return f
    if isinstance(f, str):
        try:
            return DICTIONARY[f]
        except KeyError:
            raise KeyError(f"unknown test function {f!r}; known: {sorted(DICTIONARY)}") from None
    raise TypeError("expected a TestFunction or a dictionary name")


def _evaluator(f, dim: int):
    """Wrap ``f`` so it takes ``(z, y1, y2)``; plain callables get their natural arity."""
    if isinstance(f, (TestFunction, str)):
        return get_function(f)
    if dim == 1:
        return lambda z, a, b: f(z)
    if dim == 2:
        return lambda z, a, b: f(z, a)
    return f


# ---------------------------------------------------------------------------
# orbit engine


def _layout(system):
    if isinstance(system, RotationSystem):
        return system, None, 1
    if isinstance(system, SkewProduct):
        return system.base, system.cocycle, 2
    if isinstance(system, RelativeProduct):
        return system.base, system.cocycle, 3
    raise TypeError(f"unsupported system {type(system).__name__}")


def _as_starts(starts, dim: int) -> np.ndarray:
    a = np.asarray(starts, dtype=float)
    if a.ndim == 1 and dim == 1:
        a = a[:, None]
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != dim:
        raise ValueError(f"start points must have {dim} coordinates")
    if a.shape[0] == 0:
        raise ValueError("start grid must be nonempty")
    return a


def orbit_averages(system, starts, funcs, horizons, chunk: int = 1 << 14, group: int = 256, workers: int = 1):
    """Averages ``(1/n) sum_{i<n} f(T^i x)`` for each function, start and horizon.

    Returns ``(avgs, horizons)`` with ``avgs`` of shape ``(F, S, H)``. Orbits
    advance in time chunks so memory stays bounded; fiber states carry across
    chunks. Sums are taken relative to ``f(x)``, so constant observables
    average exactly to their value.
    """
    base, cocycle, dim = _layout(system)
    starts = _as_starts(starts, dim)
    horizons = sorted(int(n) for n in horizons)
    if horizons[0] < 1:
        raise ValueError("horizons must be >= 1")
    evals = [_evaluator(f, dim) for f in funcs]
    period = 1.0 if cocycle is None or cocycle.fiber == "circle" else np.pi
    groups = [starts[i:i + group] for i in range(0, len(starts), group)]

    def run(block):
        S = block.shape[0]
        z64 = to_u64(block[:, 0])
        ystate = block[:, 1:].T.reshape(-1).copy() if dim > 1 else None
        totals = np.zeros((len(evals), S))
        ref = np.zeros((len(evals), S))
        out = np.zeros((len(evals), S, len(horizons)))
        t0 = 0
        n_max = horizons[-1]
        a = base.alpha_u64
        while t0 < n_max:
            L = min(chunk, n_max - t0)
            with np.errstate(over="ignore"):
                zc = z64[:, None] + (np.arange(t0, t0 + L, dtype=np.uint64) * a)[None, :]
            zf = u64_to_float(zc)
            if dim == 1:
                y1 = y2 = np.zeros_like(zf)
            else:
                k = dim - 1
                yo = cocycle.fiber_orbit(np.tile(zf, (k, 1)), ystate)
                ystate = yo[:, L].copy()
                ys = yo[:, :L] / period
                y1 = ys[:S]
                y2 = ys[S:] if k == 2 else y1
            inside = [j for j in range(len(horizons)) if t0 < horizons[j] <= t0 + L]
            for fi, f in enumerate(evals):
                vals = np.broadcast_to(np.asarray(f(zf, y1, y2), dtype=float), zf.shape)
                if t0 == 0:
                    ref[fi] = vals[:, 0]
                csum = np.cumsum(vals - ref[fi][:, None], axis=1)
                for j in inside:
                    out[fi, :, j] = totals[fi] + csum[:, horizons[j] - t0 - 1]
                totals[fi] += csum[:, -1]
            t0 += L
        return ref[:, :, None] + out / np.asarray(horizons, dtype=float)

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, groups))
    else:
        parts = [run(g) for g in groups]
    return np.concatenate(parts, axis=1), horizons


def birkhoff_average(system, x, f, n: int) -> float:
    """``(1/n) sum_{i<n} f(T^i x)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    avgs, _ = orbit_averages(system, [x], [f], [n])
    return float(avgs[0, 0, 0])


@dataclass(frozen=True)
class EmpiricalMeasure:
    names: tuple[str, ...]
    values: tuple[float, ...]
    horizon: int
    start: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values))


def empirical_measure(system, x, dictionary, n: int) -> EmpiricalMeasure:
    funcs = [get_function(f) for f in dictionary]
    avgs, _ = orbit_averages(system, [x], funcs, [n])
    start = tuple(np.atleast_1d(np.asarray(x, dtype=float)).tolist())
    return EmpiricalMeasure(tuple(f.name for f in funcs), tuple(avgs[:, 0, 0].tolist()), n, start)


# ---------------------------------------------------------------------------
# unique-ergodicity gap


@dataclass(frozen=True)
class UEReport:
    functions: tuple[str, ...]
    horizons: tuple[int, ...]
    gaps: np.ndarray  # (F, H)
    max_avg: np.ndarray
    min_avg: np.ndarray
    verdict: str
    per_function: dict
    pass_threshold: float
    fail_threshold: float
    n_starts: int
    note: str = (
        "finite horizons cannot certify unique ergodicity; a persistent gap is "
        "strong negative evidence, small gaps are only positive evidence"
    )
    extra: dict = field(default_factory=dict)

    def gap(self, f: str, n: int) -> float:
        return float(self.gaps[self.functions.index(f), self.horizons.index(n)])

    def rows(self):
        for i, f in enumerate(self.functions):
            for j, n in enumerate(self.horizons):
                yield f, n, float(self.gaps[i, j]), float(self.max_avg[i, j]), float(self.min_avg[i, j])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["function_id", "n", "gap", "max_start", "min_start"])
        for f, n, g, hi, lo in self.rows():
            w.writerow([f, n, f"{g:.12g}", f"{hi:.12g}", f"{lo:.12g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "functions": list(self.functions),
            "horizons": list(self.horizons),
            "gaps": [[float(v) for v in row] for row in self.gaps],
            "verdict": self.verdict,
            "per_function": self.per_function,
            "pass_threshold": self.pass_threshold,
            "fail_threshold": self.fail_threshold,
            "n_starts": self.n_starts,
            "note": self.note,
            **self.extra,
        }


def _function_verdict(gaps: np.ndarray, pass_t: float, fail_t: float) -> str:
    top = gaps[len(gaps) // 2:]
    if np.all(top > fail_t):
        return "not-uniquely-ergodic"
    if gaps[-1] < pass_t:
        return "uniquely-ergodic-evidence"
    return "inconclusive"


def ue_gap(
    system,
    start_grid,
    f_dictionary,
    horizon_schedule,
    pass_threshold: float = 0.01,
    fail_threshold: float = 0.1,
    workers: int = 1,
) -> UEReport:
    funcs = [get_function(f) if isinstance(f, str) else f for f in f_dictionary]
    names = tuple(getattr(f, "name", f"f{i}") for i, f in enumerate(funcs))
    avgs, horizons = orbit_averages(system, start_grid, funcs, horizon_schedule, workers=workers)
    return _report(names, avgs, horizons, pass_threshold, fail_threshold)


def _report(names, avgs, horizons, pass_threshold: float, fail_threshold: float) -> UEReport:
    hi, lo = avgs.max(axis=1), avgs.min(axis=1)
    gaps = hi - lo
    per = {name: _function_verdict(gaps[i], pass_threshold, fail_threshold) for i, name in enumerate(names)}
    if any(v == "not-uniquely-ergodic" for v in per.values()):
        verdict = "not-uniquely-ergodic"
    elif all(v == "uniquely-ergodic-evidence" for v in per.values()):
        verdict = "uniquely-ergodic-evidence"
    else:
        verdict = "inconclusive"
    return UEReport(names, tuple(horizons), gaps, hi, lo, verdict, per, pass_threshold, fail_threshold, avgs.shape[1])


def default_grid(dim: int, nz: int = 32, ny: int = 16, fiber_period: float = 1.0) -> np.ndarray:
    zs = np.arange(nz) / nz
    ys = np.arange(ny) / ny * fiber_period
    if dim == 1:
        return zs[:, None]
    mesh = np.meshgrid(zs, *([ys] * (dim - 1)), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def isomorphic_extension_test(
    G: Cocycle,
    base: RotationSystem,
    f_dictionary=RELATIVE_FUNCTIONS,
    start_grid=None,
    horizon_schedule=None,
    pass_threshold: float = 0.01,
    fail_threshold: float = 0.1,
    workers: int = 1,
):
    """UE evidence for the relative product ``T_G x T_G`` over ``Z``.

    Returns ``(verdict, report)`` with verdict ``isomorphic-evidence``,
    ``not-isomorphic`` or ``inconclusive``.
    """
    funcs = [get_function(f) for f in f_dictionary]
    if not any(f.separates_diagonal for f in funcs) and start_grid is None:
        raise ValueError("the dictionary needs a function of both fiber coordinates")
    period = 1.0 if G.fiber == "circle" else np.pi
    grid = default_grid(3, fiber_period=period) if start_grid is None else start_grid
    from .coboundary import _tower_coboundary, default_tower_schedule, tower_averages

    if _tower_coboundary(G):
        # orbits of a tower coboundary are walked column by column, reaching horizons far past direct iteration
        schedule = tuple(horizon_schedule or (n + 1 for n in default_tower_schedule(G)))
        avgs, _ = tower_averages(G, _as_starts(grid, 3), funcs, [n - 1 for n in schedule])
        report = _report(tuple(f.name for f in funcs), avgs, schedule, pass_threshold, fail_threshold)
    else:
        schedule = horizon_schedule or (100, 1000, 10000)
        report = ue_gap(RelativeProduct(base, G), grid, funcs, schedule, pass_threshold, fail_threshold, workers)
    return ISO_VERDICTS[report.verdict], report
