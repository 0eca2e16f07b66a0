"""Experiment harness: references, error studies and CSV output.

Errors are measured in the variables of the raw datum, ``v = a + tv * F``
where ``F`` is the (normalized) particle CDF, against either the exact
Burgers solution of the two-bump datum or a fine deterministic solution of
the raw problem. Snapshot and reference CSVs are written in normalized
variables so that they can be compared directly.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import (ErrorReport, convergence_slope, mean_and_stderr,
                       weighted_l1_distance)
from .initial_data import (FluxModel, SignedBVInitial, initial_profile, normalize,
                           two_bump_scale)
from .particles import SimulationConfig, run_simulation
from .reference import (Grid1D, ReferenceSolution, deterministic_solve,
                        exact_inviscid_burgers_profile)

__all__ = [
    "Problem",
    "RunSpec",
    "RunOutcome",
    "SweepResult",
    "exact_reference",
    "deterministic_reference",
    "run_with_errors",
    "run_many",
    "sweep_n",
    "sweep_h",
    "sweep_sigma",
    "num_workers",
    "write_snapshots",
    "write_kills",
    "write_errors",
    "write_slope",
    "write_reference",
]


def fmt(x) -> str:
    return format(float(x), ".17g")


def num_workers() -> int:
    """Worker processes for independent runs (``FRACCL_NUM_WORKERS``, default 1)."""
    try:
        return max(1, int(os.environ.get("FRACCL_NUM_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Problem:
    """Raw datum and flux; ``normalized`` gives the particle variables."""

    raw: SignedBVInitial
    flux: FluxModel

    @property
    def tv(self) -> float:
        return self.raw.tv_raw

    @property
    def offset(self) -> float:
        return self.raw.offset_a

    @property
    def normalized(self):
        return normalize(self.raw, self.flux)

    @property
    def sup_abs_Aprime(self) -> float:
        return self.normalized[1].sup_abs_Aprime


# -- references -------------------------------------------------------------------

@dataclass(frozen=True)
class _ScaledExact:
    s: float

    def __call__(self, t):
        return exact_inviscid_burgers_profile(self.s * t).scaled(self.s)


def exact_reference(problem: Problem):
    """``t -> profile`` of the exact inviscid solution for a two-bump datum
    ``s (delta_-3 - delta_-2 - delta_2 + delta_3)`` with Burgers flux
    (``u_s(t, x) = s u_1(s t, x)``); ``None`` if not applicable."""
    s = two_bump_scale(problem.raw)
    if s is None or problem.flux.kind != "burgers":
        return None
    return _ScaledExact(s)


def deterministic_reference(problem: Problem, alpha: float, sigma: float, times,
                            x_min: float = -20.0, x_max: float = 20.0, m: int = 16384,
                            dt: float | None = None, warn_support: bool = True) -> ReferenceSolution:
    """Fine-grid solution of the raw problem at ``times`` (cell-averaged
    exact initial data, default CFL step)."""
    times = sorted({round(float(t), 12) for t in times if t > 0})
    a = problem.offset
    shifted = problem.flux.rescaled(a, 1.0)   # solve for v - a
    v0 = Grid1D.from_piecewise(initial_profile(problem.raw) + (-a), x_min, x_max, m)
    snaps = deterministic_solve(v0, alpha, sigma, shifted, max(times) if times else 0.0, dt,
                                output_times=times, warn_support=warn_support)
    return ReferenceSolution(snaps, tol=1e-9, offset=a)


# -- runs ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    problem: Problem
    n: int
    h: float
    eps: float
    T: float
    sigma: float
    alpha: float
    seed: int = 0
    stratified: bool = False

    def config(self) -> SimulationConfig:
        init, flux = self.problem.normalized
        return SimulationConfig(init, flux, self.n, self.h, self.eps, self.T, self.sigma,
                                self.alpha, seed=self.seed, stratified=self.stratified)

    @property
    def meta(self) -> dict:
        return dict(N=self.n, h=self.h, eps=self.eps, sigma=self.sigma, alpha=self.alpha,
                    seed=self.seed)


@dataclass
class RunOutcome:
    spec: RunSpec
    report: ErrorReport | None
    violations: list
    snapshots: list = field(default_factory=list)
    kill_reports: list = field(default_factory=list)
    final_alive: int = 0


def run_with_errors(spec: RunSpec, reference=None, snapshot_times=(),
                    keep_kills: bool = False) -> RunOutcome:
    """One particle run with invariant checks; the weighted-L1 error against
    ``reference`` (``t -> profile`` in raw variables) is accumulated at the
    grid times ``0 < k h <= T`` and Riemann-summed with weight ``h``."""
    cfg = spec.config()
    per_time = []
    scale, offset = spec.problem.tv, spec.problem.offset

    def on_step(t, cdf, state):
        if reference is not None and t > 0:
            prof = cdf.to_piecewise(scale, offset)
            per_time.append((t, weighted_l1_distance(prof, reference(t))))

    res = run_simulation(cfg, snapshot_times=list(snapshot_times), callback=on_step,
                         check_invariants=True)
    report = None
    if reference is not None:
        report = ErrorReport(per_time, spec.h * sum(e for _, e in per_time), spec.meta)
    return RunOutcome(spec, report, res.violations, res.snapshots,
                      res.kill_reports if keep_kills else [], res.final_state.n_alive)


_WORKER_REFERENCE = None


def _init_worker(reference):
    global _WORKER_REFERENCE
    _WORKER_REFERENCE = reference


def _run_in_worker(spec):
    out = run_with_errors(spec, _WORKER_REFERENCE)
    out.snapshots = []
    return out


def run_many(specs, reference, workers: int | None = None) -> list[RunOutcome]:
    """Run independent specs (in parallel when ``workers > 1``); results are
    returned in input order so reductions are reproducible."""
    specs = list(specs)
    workers = num_workers() if workers is None else workers
    if workers <= 1 or len(specs) <= 1:
        return [run_with_errors(s, reference) for s in specs]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(reference,)) as pool:
        return list(pool.map(_run_in_worker, specs))


@dataclass
class SweepResult:
    """Outcomes of a sweep and the fitted slope of mean error against ``scale``."""

    kind: str
    outcomes: list
    points: list            # (scale, error_mean, error_stderr)
    slope: float
    intercept: float
    r_squared: float
    floor: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def violations(self):
        return [v for o in self.outcomes for v in o.violations]


def _group(outcomes, key):
    groups = {}
    for o in outcomes:
        groups.setdefault(key(o.spec), []).append(o.report.integrated)
    return groups


def sweep_n(base: RunSpec, ns, seeds, reference, c_h: float = 10.0, c_eps: float = 40.0,
            workers=None) -> SweepResult:
    """Error against ``N`` with the coupling ``h = c_h / N``, ``eps = c_eps / N``."""
    specs = [replace(base, n=int(n), h=c_h / n, eps=c_eps / n, seed=int(s))
             for n in sorted(ns) for s in seeds]
    outs = run_many(specs, reference, workers)
    groups = _group(outs, lambda sp: sp.n)
    points = [(n, *mean_and_stderr(v)) for n, v in sorted(groups.items())]
    slope, icpt, r2 = convergence_slope([(n, m) for n, m, _ in points])
    return SweepResult("sweep_N", outs, points, slope, icpt, r2,
                       extra=dict(c_h=c_h, c_eps=c_eps))


def sweep_h(base: RunSpec, hs, seeds, reference, eps_over_h: float = 4.0,
            control: bool = True, workers=None) -> SweepResult:
    """Error against ``h`` (``eps = eps_over_h * h``, ``N`` fixed).

    With ``control`` a run with ``2N`` particles at the smallest ``h``
    measures the particle-number floor (its mean error), which is
    subtracted from every mean before fitting; points that become
    nonpositive are dropped.
    """
    hs = sorted(float(h) for h in hs)
    specs = [replace(base, h=h, eps=eps_over_h * h, seed=int(s)) for h in hs for s in seeds]
    hmin = hs[0]
    if control:
        specs += [replace(base, n=2 * base.n, h=hmin, eps=eps_over_h * hmin, seed=int(s))
                  for s in seeds]
    outs = run_many(specs, reference, workers)
    main = [o for o in outs if o.spec.n == base.n]
    groups = _group(main, lambda sp: sp.h)
    points = [(h, *mean_and_stderr(v)) for h, v in sorted(groups.items())]
    floor = 0.0
    extra = {}
    if control:
        e2 = mean_and_stderr([o.report.integrated for o in outs if o.spec.n == 2 * base.n])[0]
        e1 = dict((h, m) for h, m, _ in points)[hmin]
        floor = e2
        extra = dict(control_error=e2, smallest_h_error=e1)
    fit_pts = [(h, m - floor) for h, m, _ in points if m - floor > 0]
    if len(fit_pts) >= 3:
        slope, icpt, r2 = convergence_slope(fit_pts)
    else:
        slope = icpt = r2 = float("nan")
    extra["fitted_points"] = fit_pts
    return SweepResult("sweep_h", outs, points, slope, icpt, r2, floor, extra)


def sweep_sigma(base: RunSpec, sigmas, seeds, reference, workers=None) -> SweepResult:
    """Error against the viscosity ``sigma`` (vanishing-viscosity studies)."""
    specs = [replace(base, sigma=float(sg), seed=int(s)) for sg in sorted(sigmas) for s in seeds]
    outs = run_many(specs, reference, workers)
    groups = _group(outs, lambda sp: sp.sigma)
    points = [(sg, *mean_and_stderr(v)) for sg, v in sorted(groups.items())]
    pos = [(sg, m) for sg, m, _ in points if sg > 0 and m > 0]
    if len(pos) >= 3:
        slope, icpt, r2 = convergence_slope(pos)
    else:
        slope = icpt = r2 = float("nan")
    return SweepResult("sweep_sigma", outs, points, slope, icpt, r2)


# -- CSV output ---------------------------------------------------------------------

def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_snapshots(path, snapshots):
    """``t,x,cdf_value``: one row per breakpoint of each snapshot CDF."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", "x", "cdf_value"])
        for t, cdf in snapshots:
            for x, c in zip(cdf.breakpoints, cdf.cumulative):
                w.writerow([fmt(t), fmt(x), fmt(c)])


def write_kills(path, kill_reports):
    """``t,x_i,x_j,sign_i,sign_j``: one row per killed pair."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", "x_i", "x_j", "sign_i", "sign_j"])
        for rep in kill_reports:
            for (xi, xj), (si, sj) in zip(rep.positions, rep.signs):
                w.writerow([fmt(rep.t), fmt(xi), fmt(xj), int(si), int(sj)])


def write_errors(path, outcomes):
    """``N,h,eps,sigma,alpha,seed,t,weighted_l1`` per grid time, plus one
    summary row per run with ``t = integrated``."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["N", "h", "eps", "sigma", "alpha", "seed", "t", "weighted_l1"])
        for o in outcomes:
            if o.report is None:
                continue
            m = o.spec.meta
            head = [m["N"], fmt(m["h"]), fmt(m["eps"]), fmt(m["sigma"]), fmt(m["alpha"]), m["seed"]]
            for t, e in o.report.per_time:
                w.writerow(head + [fmt(t), fmt(e)])
            w.writerow(head + ["integrated", fmt(o.report.integrated)])


def write_slope(path, sweep: SweepResult):
    """``scale,error_mean,error_stderr`` rows; the fit goes to ``*_fit.csv``."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["scale", "error_mean", "error_stderr"])
        for s, m, se in sweep.points:
            w.writerow([fmt(s), fmt(m), fmt(se)])
    path = Path(path)
    fh, w = _writer(path.with_name(path.stem + "_fit.csv"))
    with fh:
        w.writerow(["slope", "intercept", "r_squared", "floor"])
        w.writerow([fmt(sweep.slope), fmt(sweep.intercept), fmt(sweep.r_squared),
                    fmt(sweep.floor)])


def write_reference(path, problem: Problem, reference, times, x):
    """``t,x,value`` of a reference in normalized variables ``(v - a) / tv``."""
    fh, w = _writer(path)
    xs = np.asarray(x, dtype=float)
    with fh:
        w.writerow(["t", "x", "value"])
        for t in times:
            prof = reference(t) if t > 0 else initial_profile(problem.raw)
            vals = (prof(xs) - problem.offset) / problem.tv
            for xi, vi in zip(xs, vals):
                w.writerow([fmt(t), fmt(xi), fmt(vi)])
