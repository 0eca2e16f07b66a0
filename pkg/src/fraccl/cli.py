"""Command-line experiment runner.

Configs are INI files (``configparser``) with a strict key schema::

    [experiment]
    alpha = 1.5
    sigma = 1.0
    N = 1000
    h = 0.01
    eps = 0.04
    T = 1.0
    lambda = 2
    seed = 0
    seeds = 1
    snapshot_times = 0.25, 0.5, 0.75, 1
    output = out
    stratified = false
    vanishing_viscosity = false

    [initial_data]
    atoms = -3:0.25, -2:-0.25, 2:-0.25, 3:0.25   # location:signed_mass
    pieces =                                       # left:right:signed_density
    offset_a = 0

    [flux]
    kind = burgers            # or: polynomial
    coefficients =            # increasing degree, for kind = polynomial

    [sweep]                   # only for sweep-n / sweep-h / sweep-sigma
    N = 125, 250, 500, 1000
    c_h = 10                  # sweep-n: h = c_h / N
    c_eps = 40                # sweep-n: eps = c_eps / N
    h = 0.25, 0.125, 0.0625
    eps_over_h = 4            # sweep-h: eps = eps_over_h * h
    control = true            # sweep-h: doubled-N noise-floor run
    sigma = 0.1, 0.01, 0.001

    [reference]
    kind = auto               # auto | exact | deterministic | none
    x_min = -20
    x_max = 20
    m = 8192
    dt =                      # default: 0.9 of the CFL limit

Exit status: 0 success, 2 invalid config or regime check failed (unless
``--override-regime``), 3 numerical abort.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import RegimeReport, validate_theorem_hypotheses
from .experiments import (Problem, RunSpec, deterministic_reference, exact_reference,
                          run_with_errors, sweep_h, sweep_n, sweep_sigma, write_errors,
                          write_kills, write_reference, write_slope, write_snapshots)
from .initial_data import FluxModel, SignedBVInitial
from .particles import NumericalAbort

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3

SCHEMA = {
    "experiment": {"alpha", "sigma", "N", "h", "eps", "T", "lambda", "seed", "seeds",
                   "snapshot_times", "output", "stratified", "vanishing_viscosity"},
    "initial_data": {"atoms", "pieces", "offset_a"},
    "flux": {"kind", "coefficients"},
    "sweep": {"N", "c_h", "c_eps", "h", "eps_over_h", "control", "sigma"},
    "reference": {"kind", "x_min", "x_max", "m", "dt"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    alpha: float
    sigma: float
    N: int
    h: float
    eps: float
    T: float
    problem: Problem
    lam: float = 2.0
    seed: int = 0
    seeds: int = 1
    snapshot_times: tuple = ()
    output: str = "out"
    stratified: bool = False
    vanishing_viscosity: bool = False
    sweep: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)

    def spec(self, **over) -> RunSpec:
        base = RunSpec(self.problem, self.N, self.h, self.eps, self.T, self.sigma, self.alpha,
                       self.seed, self.stratified)
        return replace(base, **over)

    @property
    def seed_list(self):
        return list(range(self.seed, self.seed + self.seeds))


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _pairs(text: str, arity: int, what: str):
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != arity:
            raise ConfigError(f"{what} entry {item!r} needs {arity} ':'-separated numbers")
        out.append(tuple(float(p) for p in parts))
    return out


def load_config(path) -> ExperimentConfig:
    """Parse and validate an INI experiment config (unknown keys rejected)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - SCHEMA[sec]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    try:
        def need(key, conv=float):
            if key not in ex:
                raise ConfigError(f"[experiment] {key} is required")
            return conv(ex[key])

        alpha, sigma = need("alpha"), need("sigma")
        N, h, eps, T = need("N", int), need("h"), need("eps"), need("T")
        lam = float(ex.get("lambda", "2"))
        seed, seeds = int(ex.get("seed", "0")), int(ex.get("seeds", "1"))
        snaps = tuple(_floats(ex.get("snapshot_times", "")))
        stratified = ex.getboolean("stratified", False)
        vanishing = ex.getboolean("vanishing_viscosity", False)

        ini = cp["initial_data"] if "initial_data" in cp else {}
        atoms = _pairs(ini.get("atoms", ""), 2, "atoms")
        pieces = _pairs(ini.get("pieces", ""), 3, "pieces")
        raw = SignedBVInitial(atoms=tuple(atoms), pieces=tuple(pieces),
                              offset_a=float(ini.get("offset_a", "0")))
        fl = cp["flux"] if "flux" in cp else {}
        kind = fl.get("kind", "burgers").strip()
        if kind == "burgers":
            flux = FluxModel.burgers()
        elif kind == "polynomial":
            coeffs = _floats(fl.get("coefficients", ""))
            if not coeffs:
                raise ConfigError("[flux] polynomial needs coefficients")
            flux = FluxModel.polynomial(coeffs)
        else:
            raise ConfigError(f"unknown flux kind {kind!r}")

        sw = cp["sweep"] if "sweep" in cp else {}
        sweep = {}
        for key in ("N", "h", "sigma"):
            if key in sw:
                vals = _floats(sw[key])
                if not vals:
                    raise ConfigError(f"[sweep] {key} is empty")
                if vals != sorted(vals) and vals != sorted(vals, reverse=True):
                    raise ConfigError(f"[sweep] {key} must be sorted")
                sweep[key] = [int(v) for v in vals] if key == "N" else vals
        for key, default in (("c_h", 10.0), ("c_eps", 40.0), ("eps_over_h", 4.0)):
            sweep[key] = float(sw.get(key, default))
        sweep["control"] = (sw.getboolean("control", True) if hasattr(sw, "getboolean")
                            else True)

        rf = cp["reference"] if "reference" in cp else {}
        reference = dict(kind=rf.get("kind", "auto").strip(),
                         x_min=float(rf.get("x_min", "-20")), x_max=float(rf.get("x_max", "20")),
                         m=int(rf.get("m", "8192")),
                         dt=float(rf["dt"]) if rf.get("dt", "").strip() else None)
        if reference["kind"] not in {"auto", "exact", "deterministic", "none"}:
            raise ConfigError(f"unknown reference kind {reference['kind']!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if N < 1 or not (h > 0 and eps > 0) or T < 0 or sigma < 0 or seeds < 1:
        raise ConfigError("need N >= 1, h > 0, eps > 0, T >= 0, sigma >= 0, seeds >= 1")
    if not 0 < alpha <= 2:
        raise ConfigError("alpha must lie in (0, 2]")
    if any(t < 0 or t > T + 1e-12 for t in snaps):
        raise ConfigError("snapshot times must lie in [0, T]")
    return ExperimentConfig(alpha, sigma, N, h, eps, T, Problem(raw, flux), lam, seed, seeds,
                            snaps, ex.get("output", "out"), stratified, vanishing, sweep,
                            reference)


def regime(cfg: ExperimentConfig, N=None, h=None, eps=None, sigma=None) -> RegimeReport:
    return validate_theorem_hypotheses(
        N or cfg.N, h or cfg.h, eps or cfg.eps, cfg.sigma if sigma is None else sigma,
        cfg.alpha, cfg.lam, cfg.problem.normalized[1], cfg.vanishing_viscosity)


def build_reference(cfg: ExperimentConfig, times, sigma=None):
    """Reference ``t -> profile`` in raw variables, or ``None``."""
    kind = cfg.reference["kind"]
    sigma = cfg.sigma if sigma is None else sigma
    exact = exact_reference(cfg.problem)
    if kind == "none":
        return None
    if kind == "exact" or (kind == "auto" and (sigma == 0 or cfg.vanishing_viscosity)):
        if exact is None:
            raise ConfigError("exact reference only available for the two-bump Burgers datum")
        return exact
    times = [t for t in times if t > 0]
    if not times:
        return None
    if cfg.problem.raw.total_mass != 0.0:
        raise ConfigError("deterministic reference needs v0 to vanish at both ends "
                          "(zero total mass)")
    r = cfg.reference
    return deterministic_reference(cfg.problem, cfg.alpha, sigma, times, r["x_min"], r["x_max"],
                                   r["m"], r["dt"], warn_support=False)


def _grid_times(T, h):
    n = int(np.floor(T / h + 1e-9))
    return [k * h for k in range(1, n + 1)]


def _check_regimes(reports, override: bool, out=sys.stdout) -> bool:
    failed = [r for r in reports if r.theorem == "none"]
    for r in failed[:3]:
        print(r.table(), file=out)
    if failed and not override:
        print(f"regime check failed for {len(failed)} parameter point(s); "
              "pass --override-regime to run anyway", file=sys.stderr)
        return False
    return True


def cmd_validate(cfg, args) -> int:
    rep = regime(cfg)
    print(rep.table())
    return EXIT_OK if rep.theorem != "none" else EXIT_INVALID


def cmd_simulate(cfg, args) -> int:
    if not _check_regimes([regime(cfg)], args.override_regime):
        return EXIT_INVALID
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    ref = build_reference(cfg, _grid_times(cfg.T, cfg.h))
    outcomes = []
    for s in cfg.seed_list:
        spec = cfg.spec(seed=s)
        o = run_with_errors(spec, ref, snapshot_times=cfg.snapshot_times, keep_kills=True)
        suffix = f"_seed{s}" if cfg.seeds > 1 else ""
        write_snapshots(out / f"snapshots{suffix}.csv", o.snapshots)
        write_kills(out / f"kills{suffix}.csv", o.kill_reports)
        if o.violations:
            print("\n".join(o.violations[:10]), file=sys.stderr)
        outcomes.append(o)
    if ref is not None:
        write_errors(out / "errors.csv", outcomes)
        for o in outcomes:
            print(f"seed {o.spec.seed}: integrated weighted-L1 error {o.report.integrated:.6g}")
    return EXIT_OK


def _sweep_values(cfg, key):
    vals = cfg.sweep.get(key)
    if not vals:
        raise ConfigError(f"[sweep] {key} is required for this subcommand")
    return vals


def cmd_sweep_n(cfg, args) -> int:
    ns = sorted(_sweep_values(cfg, "N"))
    c_h, c_eps = cfg.sweep["c_h"], cfg.sweep["c_eps"]
    if not _check_regimes([regime(cfg, N=n, h=c_h / n, eps=c_eps / n) for n in ns],
                          args.override_regime):
        return EXIT_INVALID
    ref = build_reference(cfg, _grid_times(cfg.T, c_h / max(ns)))
    if ref is None:
        raise ConfigError("sweeps need a reference")
    res = sweep_n(cfg.spec(), ns, cfg.seed_list, ref, c_h, c_eps)
    return _finish_sweep(cfg, args, res, "sweep_N")


def cmd_sweep_h(cfg, args) -> int:
    hs = sorted(_sweep_values(cfg, "h"))
    k = cfg.sweep["eps_over_h"]
    if not _check_regimes([regime(cfg, h=h, eps=k * h) for h in hs], args.override_regime):
        return EXIT_INVALID
    ref = build_reference(cfg, _grid_times(cfg.T, _common_step(hs)))
    if ref is None:
        raise ConfigError("sweeps need a reference")
    res = sweep_h(cfg.spec(), hs, cfg.seed_list, ref, k, cfg.sweep["control"])
    return _finish_sweep(cfg, args, res, "sweep_h")


def cmd_sweep_sigma(cfg, args) -> int:
    sigmas = sorted(_sweep_values(cfg, "sigma"))
    if not _check_regimes([regime(cfg, sigma=s) for s in sigmas], args.override_regime):
        return EXIT_INVALID
    ref = build_reference(cfg, _grid_times(cfg.T, cfg.h), sigma=0.0)
    res = sweep_sigma(cfg.spec(), sigmas, cfg.seed_list, ref)
    return _finish_sweep(cfg, args, res, "sweep_sigma")


def _common_step(hs):
    """Largest step dividing every ``h`` in the list (they are usually dyadic)."""
    base = min(hs)
    for d in (1, 2, 4, 8, 16, 32, 64):
        step = base / d
        if all(abs(h / step - round(h / step)) < 1e-9 for h in hs):
            return step
    raise ConfigError("sweep step sizes must share a common grid")


def _finish_sweep(cfg, args, res, name) -> int:
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_errors(out / f"{name}_errors.csv", res.outcomes)
    write_slope(out / f"{name}_slope.csv", res)
    if res.violations:
        print("\n".join(res.violations[:10]), file=sys.stderr)
    print(f"{name}: slope {res.slope:.4g} (r^2 = {res.r_squared:.4g}, floor = {res.floor:.4g})")
    return EXIT_OK


def cmd_reference(cfg, args) -> int:
    times = list(cfg.snapshot_times) or [cfg.T]
    ref = build_reference(cfg, times)
    if ref is None:
        raise ConfigError("no reference requested ([reference] kind = none)")
    out = Path(args.out or cfg.output)
    r = cfg.reference
    xs = np.linspace(r["x_min"], r["x_max"], 2001)
    write_reference(out / "reference.csv", cfg.problem, ref, times, xs)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "sweep-n": cmd_sweep_n,
    "sweep-h": cmd_sweep_h,
    "sweep-sigma": cmd_sweep_sigma,
    "reference": cmd_reference,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraccl", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI experiment config")
    p.add_argument("--seed", type=int, help="override [experiment] seed")
    p.add_argument("--seeds", type=int, help="override [experiment] seeds (replications)")
    p.add_argument("--out", help="output directory (created if missing)")
    p.add_argument("--override-regime", action="store_true",
                   help="run even if the theorem hypotheses are not met")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.seeds is not None:
            if args.seeds < 1:
                raise ConfigError("--seeds must be >= 1")
            cfg.seeds = args.seeds
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
