"""Batch command line: ``skewlab <command> [--config FILE] [--set KEY=VALUE ...]``.

Every command reads a plain ``key = value`` config file, applies ``--set``
overrides, writes CSV/JSON artifacts into ``--out`` and exits with

    0   pass / positive evidence
    2   negative verdict
    3   inconclusive
    64  usage error
    70  internal numeric failure
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import click
import numpy as np

from .base import PrecisionError, RotationSystem, SturmianSystem, ThueMorseSystem
from .coboundary import CertificateError, build_coboundary, certificate_json, certify, verify_E_membership
from .ergodicity import (
    RELATIVE_FUNCTIONS,
    SKEW_FUNCTIONS,
    BASE_FUNCTIONS,
    default_grid,
    get_function,
    isomorphic_extension_test,
    ue_gap,
)
from .lyapunov import FurmanConfig, LyapunovError, furman_classify, lyapunov_estimate
from .metrics import (
    SkewProjection,
    SturmianFactor,
    ThueMorseFactor,
    besicovitch_estimate,
    fiber_diameter_profile,
    mean_equicontinuity_modulus,
    weyl_estimate,
)
from .skew import CocycleError, SkewProduct, load_cocycle, parse_cocycle, save_cocycle

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3, 64, 70


class ConfigError(click.UsageError):
    pass


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


# ---------------------------------------------------------------------------
# config


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(float(v)) for v in text.split(",") if v.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


# command -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "pseudometric": {
        "system": (str, "rotation"),
        "base": (str, "golden"),
        "cocycle": (str, "rotation:0.2"),
        "eps": (_floats, (0.02, 0.05, 0.1, 0.2)),
        "delta_grid": (_floats, ()),
        "pair_budget": (_int, 400),
        "csv_pairs": (_int, 100),
        "horizon": (_int, 1000),
        "window": (_int, 0),
        "adversarial": (_bool, True),
    },
    "fiber-profile": {
        "system": (str, "skew"),
        "base": (str, "golden"),
        "cocycle": (str, "rotation:0.2"),
        "samples": (_int, 1000),
        "resolution": (_int, 64),
    },
    "build-coboundary": {
        "base": (str, "golden"),
        "f": (str, "diag_cosine"),
        "eps": (float, 0.25),
        "delta": (float, 0.25),
        "n_z": (_int, 1000),
        "n_y": (_int, 1000),
        "n_quad_z": (_int, 1000),
        "n_quad_y": (_int, 64),
    },
    "verify-cocycle": {
        "cocycle": (str, "cocycle.json"),
        "base": (str, "golden"),
        "f": (str, "diag_cosine"),
        "eps": (float, 0.25),
        "delta": (float, 0.25),
        "schedule": (_ints, ()),
        "grid_z": (_int, 32),
        "grid_y": (_int, 16),
        "mode": (str, "auto"),
        "certify": (_bool, True),
        "n_z": (_int, 1000),
        "n_y": (_int, 1000),
        "n_quad_z": (_int, 1000),
        "n_quad_y": (_int, 64),
    },
    "ue-test": {
        "base": (str, "golden"),
        "cocycle": (str, ""),
        "functions": (_names, ()),
        "schedule": (_ints, (1000, 10000, 100000)),
        "grid_z": (_int, 32),
        "grid_y": (_int, 16),
        "pass_threshold": (float, 0.01),
        "fail_threshold": (float, 0.1),
    },
    "iso-test": {
        "base": (str, "golden"),
        "cocycle": (str, "rotation:0.2"),
        "functions": (_names, RELATIVE_FUNCTIONS),
        "schedule": (_ints, ()),
        "grid_z": (_int, 32),
        "grid_y": (_int, 16),
        "pass_threshold": (float, 0.01),
        "fail_threshold": (float, 0.1),
    },
    "lyapunov": {
        "base": (str, "golden"),
        "cocycle": (str, "herman:2"),
        "n": (_int, 100000),
        "starts": (_int, 16),
        "random_starts": (_bool, False),
    },
    "classify": {
        "base": (str, "golden"),
        "cocycle": (str, "herman:2"),
        "corroborate": (_bool, True),
        **{
            f.name: ((_ints if f.name == "corroboration_grid" else (_int if f.type in ("int", int) else float)), f.default)
            for f in fields(FurmanConfig)
        },
    },
}


def read_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config line {lineno}: expected key = value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_config(command: str, text_values: dict[str, str], overrides: tuple[str, ...]) -> dict:
    raw = dict(text_values)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = value.strip()
    schema = SCHEMA[command]
    cfg = {k: default for k, (_, default) in schema.items()}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for {command}; known: {', '.join(sorted(schema))}")
        try:
            cfg[key] = schema[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for config key {key!r}: {exc}") from None
    return cfg


# ---------------------------------------------------------------------------
# output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if obj != obj else float(obj)  # NaN is not JSON
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8", newline="\n")


@dataclass
class Context:
    command: str
    cfg: dict
    seed: int
    workers: int
    out: Path

    @property
    def rng(self) -> np.random.Generator:
        # counter-based: the same seed gives the same stream on every platform
        return np.random.Generator(np.random.Philox(key=self.seed))

    def echo(self) -> dict:
        return {"command": self.command, "seed": self.seed, "config": self.cfg}


# ---------------------------------------------------------------------------
# builders from config values


def make_base(spec: str) -> RotationSystem:
    try:
        return RotationSystem.from_value(spec)
    except (ValueError, TypeError, PrecisionError) as exc:
        raise ConfigError(f"bad value for config key 'base': {exc}") from None


def make_cocycle(spec: str):
    try:
        return parse_cocycle(spec)
    except (CocycleError, ValueError, OSError) as exc:
        raise ConfigError(f"bad value for config key 'cocycle': {exc}") from None


def make_system(ctx: Context):
    kind = ctx.cfg["system"]
    base = make_base(ctx.cfg["base"])
    if kind == "rotation":
        return base
    if kind == "sturmian":
        return SturmianSystem(base)
    if kind == "thue-morse":
        return ThueMorseSystem()
    if kind == "skew":
        return SkewProduct(base, make_cocycle(ctx.cfg["cocycle"]))
    raise ConfigError(f"bad value for config key 'system': {kind!r} (rotation, sturmian, thue-morse, skew)")


def _point_repr(p) -> str:
    if isinstance(p, tuple):
        return ";".join(fmt(float(v)) for v in p)
    if isinstance(p, (float, np.floating)):
        return fmt(float(p))
    return repr(p)


def _grid(ctx: Context, dim: int, period: float) -> np.ndarray:
    return default_grid(dim, ctx.cfg["grid_z"], ctx.cfg["grid_y"], fiber_period=period)


def _functions(names, fallback):
    try:
        return [get_function(n) for n in (names or fallback)]
    except KeyError as exc:
        raise ConfigError(f"bad value for config key 'functions': {exc.args[0]}") from None


# ---------------------------------------------------------------------------
# commands


def run_pseudometric(ctx: Context) -> int:
    """Besicovitch/Weyl estimates on random pairs and the empirical modulus."""
    cfg = ctx.cfg
    if cfg["pair_budget"] < 100:
        raise ConfigError("bad value for config key 'pair_budget': need at least 100 pairs")
    if cfg["horizon"] < 1:
        raise ConfigError("bad value for config key 'horizon': must be >= 1")
    system = make_system(ctx)
    rng = ctx.rng
    profile = mean_equicontinuity_modulus(
        system, cfg["eps"], cfg["pair_budget"], cfg["horizon"], cfg["delta_grid"] or None, rng, cfg["adversarial"]
    )
    window = cfg["window"] or None
    deltas = cfg["delta_grid"] or cfg["eps"]
    rows = []
    for i in range(cfg["csv_pairs"]):
        x = system.random_point(rng)
        y = system.random_near(x, float(deltas[i % len(deltas)]), rng)
        dB = besicovitch_estimate(system, x, y, cfg["horizon"]).value
        dW = weyl_estimate(system, x, y, cfg["horizon"], window).value
        rows.append((i, system.metric(x, y), dB, dW, cfg["horizon"]))
    write_csv(ctx.out / "pairs.csv", ["pair_id", "d", "d_B_hat", "d_W_hat", "horizon"], rows)
    write_json(ctx.out / "modulus.json", {**ctx.echo(), "profile": asdict(profile)})
    return EXIT_OK


def run_fiber_profile(ctx: Context) -> int:
    """Diameters of sampled fibers of a factor map."""
    cfg = ctx.cfg
    system = make_system(ctx)
    rng = ctx.rng
    if isinstance(system, SkewProduct):
        factor = SkewProjection(system)
        zs = [float(z) for z in rng.random(cfg["samples"])]
    elif isinstance(system, SturmianSystem):
        factor = SturmianFactor(system)
        # the orbit of 0 consists of the doubly coded points; include a few of them
        zs = [float(z) for z in rng.random(cfg["samples"])]
        zs[: min(4, len(zs))] = [float(v) for v in system.rotation.orbit(0.0, min(4, len(zs)))]
    elif isinstance(system, ThueMorseSystem):
        factor = ThueMorseFactor(system)
        zs = [system.random_point(rng) for _ in range(cfg["samples"])]
    else:
        raise ConfigError("bad value for config key 'system': the rotation has no nontrivial factor map here")
    profile = fiber_diameter_profile(factor, zs, cfg["resolution"])
    write_csv(
        ctx.out / "fibers.csv",
        ["sample_id", "z", "diameter"],
        [(i, _point_repr(z), d) for i, (z, d) in enumerate(profile.samples)],
    )
    write_json(ctx.out / "fiber_profile.json", {**ctx.echo(), "inf_estimate": profile.inf_estimate, "samples": len(profile.samples)})
    return EXIT_OK


def _grids(cfg) -> dict:
    return {k: cfg[k] for k in ("n_z", "n_y", "n_quad_z", "n_quad_y")}


def run_build_coboundary(ctx: Context) -> int:
    """Build and certify a coboundary close to the identity."""
    cfg = ctx.cfg
    for key in ("eps", "delta"):
        if not 0 < cfg[key] < 1:
            raise ConfigError(f"bad value for config key {key!r}: must lie in (0, 1)")
    base = make_base(cfg["base"])
    f = _functions([cfg["f"]], ())[0]
    if not f.unit:
        raise ConfigError(f"bad value for config key 'f': {f.name!r} does not take values in [0, 1]")
    result = build_coboundary(base, f, cfg["eps"], cfg["delta"], **_grids(cfg))
    save_cocycle(result.G, ctx.out / "cocycle.json")
    (ctx.out / "certificate.json").write_text(
        json.dumps(_plain({**ctx.echo(), "report": json.loads(certificate_json(result.report))}), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    return EXIT_OK if result.report["passed"] else EXIT_NEGATIVE


def run_verify_cocycle(ctx: Context) -> int:
    """Re-certify a saved coboundary and test membership in E(f, eps)."""
    cfg = ctx.cfg
    path = Path(cfg["cocycle"])
    if not path.is_file():
        raise ConfigError(f"bad value for config key 'cocycle': no such file {path}")
    try:
        G = load_cocycle(path)
    except CocycleError as exc:
        raise ConfigError(f"bad value for config key 'cocycle': {exc}") from None
    base = make_base(cfg["base"])
    f = _functions([cfg["f"]], ())[0]
    payload = ctx.echo()
    ok = True
    if cfg["certify"] and hasattr(G, "H") and hasattr(G.H, "path"):
        cert = certify(G, f, cfg["eps"], cfg["delta"], **_grids(cfg))
        payload["certificates"] = cert
        ok = cert["distance_passed"] and cert["integral_passed"]
    rep = verify_E_membership(
        G, f, cfg["eps"], base, cfg["schedule"] or None, cfg["grid_z"], cfg["grid_y"], cfg["mode"], ctx.workers
    )
    payload["membership"] = rep.to_dict()
    write_json(ctx.out / "verify.json", payload)
    write_csv(
        ctx.out / "membership.csv",
        ["n", "deviation", "median", "approximation"],
        zip(rep.schedule, rep.deviations, rep.medians, rep.approximation),
    )
    return EXIT_OK if (ok and rep.member) else EXIT_NEGATIVE


VERDICT_CODES = {
    "uniquely-ergodic-evidence": EXIT_OK,
    "isomorphic-evidence": EXIT_OK,
    "not-uniquely-ergodic": EXIT_NEGATIVE,
    "not-isomorphic": EXIT_NEGATIVE,
    "inconclusive": EXIT_INCONCLUSIVE,
}


def _write_ue(ctx: Context, report, verdict: str, stem: str) -> int:
    (ctx.out / f"{stem}.csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")
    write_json(ctx.out / f"{stem}.json", {**ctx.echo(), "verdict": verdict, "report": report.to_dict()})
    return VERDICT_CODES[verdict]


def run_ue_test(ctx: Context) -> int:
    """Birkhoff-average gaps over a start grid (rotation or skew product)."""
    cfg = ctx.cfg
    base = make_base(cfg["base"])
    if cfg["cocycle"]:
        G = make_cocycle(cfg["cocycle"])
        system = SkewProduct(base, G)
        grid = _grid(ctx, 2, 1.0 if G.fiber == "circle" else np.pi)
        funcs = _functions(cfg["functions"], SKEW_FUNCTIONS)
    else:
        system, grid = base, _grid(ctx, 1, 1.0)
        funcs = _functions(cfg["functions"], BASE_FUNCTIONS)
    report = ue_gap(system, grid, funcs, cfg["schedule"], cfg["pass_threshold"], cfg["fail_threshold"], ctx.workers)
    return _write_ue(ctx, report, report.verdict, "ue")


def run_iso_test(ctx: Context) -> int:
    """Unique-ergodicity test of the relative product over the base."""
    cfg = ctx.cfg
    base = make_base(cfg["base"])
    G = make_cocycle(cfg["cocycle"])
    funcs = _functions(cfg["functions"], RELATIVE_FUNCTIONS)
    if not any(f.separates_diagonal for f in funcs):
        raise ConfigError("bad value for config key 'functions': include a function of both fiber coordinates")
    grid = _grid(ctx, 3, 1.0 if G.fiber == "circle" else np.pi)
    verdict, report = isomorphic_extension_test(
        G, base, funcs, grid, cfg["schedule"] or None, cfg["pass_threshold"], cfg["fail_threshold"], ctx.workers
    )
    return _write_ue(ctx, report, verdict, "iso")


def _projective(spec: str):
    G = make_cocycle(spec)
    if G.fiber != "projective":
        raise ConfigError(f"bad value for config key 'cocycle': {spec!r} is not SL(2,R)-valued")
    return G


def run_lyapunov(ctx: Context) -> int:
    """Finite-time Lyapunov exponents of an SL(2,R) cocycle."""
    cfg = ctx.cfg
    if cfg["n"] < 1 or cfg["starts"] < 1:
        raise ConfigError("bad value for config key 'n' or 'starts': must be >= 1")
    base = make_base(cfg["base"])
    G = _projective(cfg["cocycle"])
    if cfg["random_starts"]:
        starts = np.sort(ctx.rng.random(cfg["starts"]))
    else:
        starts = (np.arange(cfg["starts"]) + 0.5) / cfg["starts"]
    est = lyapunov_estimate(G, base, starts, cfg["n"])
    (ctx.out / "exponents.csv").write_text(est.to_csv(), encoding="utf-8", newline="\n")
    write_json(ctx.out / "lyapunov.json", {**ctx.echo(), **est.to_dict()})
    return EXIT_OK


def run_classify(ctx: Context) -> int:
    """Assign a trichotomy class to an SL(2,R) cocycle."""
    cfg = ctx.cfg
    base = make_base(cfg["base"])
    G = _projective(cfg["cocycle"])
    try:
        fc = FurmanConfig(**{f.name: cfg[f.name] for f in fields(FurmanConfig)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad classifier config: {exc}") from None
    report = furman_classify(G, base, fc, corroborate=cfg["corroborate"])
    write_json(ctx.out / "classify.json", {**ctx.echo(), "report": report.to_dict()})
    return EXIT_INCONCLUSIVE if report.assigned_class == "undetermined" else EXIT_OK


RUNNERS = {
    "pseudometric": run_pseudometric,
    "fiber-profile": run_fiber_profile,
    "build-coboundary": run_build_coboundary,
    "verify-cocycle": run_verify_cocycle,
    "ue-test": run_ue_test,
    "iso-test": run_iso_test,
    "lyapunov": run_lyapunov,
    "classify": run_classify,
}


# ---------------------------------------------------------------------------
# click surface


def _seed(ctx, param, value):
    if value is None:
        return 0
    if not 0 <= value < 1 << 64:
        raise click.BadParameter("seed must be an unsigned 64-bit integer")
    return value


def _command(name: str):
    def callback(config, overrides, seed, workers, out):
        text = {}
        if config is not None:
            text = read_config_text(Path(config).read_text(encoding="utf-8"))
        cfg = resolve_config(name, text, overrides)
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        code = RUNNERS[name](Context(name, cfg, seed, workers, out_dir))
        raise _Exit(code)

    doc = (RUNNERS[name].__doc__ or f"Run the {name} experiment.").strip()
    cmd = click.Command(
        name,
        callback=callback,
        help=doc,
        params=[
            click.Option(["--config", "config"], type=click.Path(exists=True, dir_okay=False), help="key = value config file"),
            click.Option(["--set", "overrides"], multiple=True, metavar="KEY=VALUE", help="override one config key"),
            click.Option(["--seed"], type=int, default=0, callback=_seed, show_default=True, help="64-bit seed"),
            click.Option(["--workers"], type=int, default=1, show_default=True),
            click.Option(["--out"], type=click.Path(file_okay=False), default=".", show_default=True, help="output directory"),
        ],
    )
    return cmd


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Experiments on skew products, isomorphic extensions and projective cocycles."""


for _name in RUNNERS:
    cli.add_command(_command(_name))


def main(argv=None) -> int:
    """Entry point; maps verdicts and failures onto exit codes."""
    try:
        cli.main(args=argv, prog_name="skewlab", standalone_mode=False)
        code = EXIT_OK
    except _Exit as e:
        code = e.code
    except click.exceptions.Exit as e:  # --help
        code = e.exit_code
    except click.exceptions.Abort:
        code = EXIT_USAGE
    except click.ClickException as e:
        e.show()
        code = EXIT_USAGE
    except CertificateError as e:
        click.echo(f"certificate failed: {e}", err=True)
        code = EXIT_NEGATIVE
    except (LyapunovError, PrecisionError, ArithmeticError) as e:
        click.echo(f"numeric failure: {e}", err=True)
        code = EXIT_NUMERIC
    except (ValueError, CocycleError) as e:
        click.echo(f"Error: {e}", err=True)
        code = EXIT_USAGE
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":  # pragma: no cover
    main()
