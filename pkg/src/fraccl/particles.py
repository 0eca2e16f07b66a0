"""Signed-weight particle system with pair killing.

Each particle carries the weight ``gamma(X0) / N``. At every grid time
``k h`` opposite-sign neighbours closer than ``eps`` are killed (leftmost
couple first, recursively), then the survivors take one Euler step

    X <- X + A'(H * mu(X)) h + sigma * L_h,

where ``H * mu(X)`` is the sum of the weights of alive particles located at
or to the left of ``X`` (the particle's own weight included; exact ties
are resolved by particle index, see :func:`drift_cdf_values`).

Signed mass and total variation are tracked as integer particle counts so
conservation can be asserted exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .initial_data import FluxModel, SignedBVInitial, gamma_at, sample_positions
from .piecewise import PiecewiseLinear
from .stable_levy import StableDriver

__all__ = [
    "NumericalAbort",
    "ParticleState",
    "SignedCdf",
    "KillReport",
    "SimulationConfig",
    "SimulationResult",
    "init_particles",
    "kill_pairs",
    "euler_step",
    "evaluate_cdf",
    "signed_cdf",
    "run_simulation",
    "total_signed_mass",
    "total_variation",
    "leftmost_kill_reference",
    "check_kill_invariants",
]


class NumericalAbort(RuntimeError):
    """A particle position became NaN or infinite."""


@numba.njit(cache=True)
def _kill_scan(pos, sgn, eps):
    """Single left-to-right pass with a survivor stack.

    ``pos``/``sgn`` are the alive particles in sorted order. Returns an
    ``(npairs, 2)`` array of indices into that order, left member first.
    """
    n = pos.shape[0]
    stack = np.empty(n, dtype=np.int64)
    pairs = np.empty((n // 2, 2), dtype=np.int64)
    top = -1
    npairs = 0
    for j in range(n):
        if top >= 0:
            i = stack[top]
            if sgn[i] != sgn[j] and pos[j] - pos[i] < eps:
                pairs[npairs, 0] = i
                pairs[npairs, 1] = j
                npairs += 1
                top -= 1
                continue
        top += 1
        stack[top] = j
    return pairs[:npairs]


def leftmost_kill_reference(positions, signs, eps):
    """Literal recursive rule: kill the leftmost consecutive opposite-sign
    couple closer than ``eps``, then start again on the remaining particles.

    Quadratic; meant for checking the stack scan. Returns the killed index
    pairs as a list of ``(i, j)`` tuples (``i`` left of ``j``).
    """
    order = sorted(range(len(positions)), key=lambda i: (positions[i], i))
    killed = []
    while True:
        for a in range(len(order) - 1):
            i, j = order[a], order[a + 1]
            if signs[i] != signs[j] and positions[j] - positions[i] < eps:
                killed.append((i, j))
                del order[a:a + 2]
                break
        else:
            return killed


@dataclass
class ParticleState:
    """Particles at grid time ``k h``.

    ``sort_perm`` lists alive particle indices in nondecreasing position
    order (ties broken by index).
    """

    positions: np.ndarray
    signs: np.ndarray
    alive: np.ndarray
    death_time: np.ndarray
    k: int = 0
    time: float = 0.0
    sort_perm: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sort_perm is None:
            self.sort_perm = _sorted_alive(self.positions, self.alive)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "ParticleState":
        return ParticleState(self.positions.copy(), self.signs.copy(), self.alive.copy(),
                             self.death_time.copy(), self.k, self.time, self.sort_perm.copy())

    @property
    def mass_numerator(self) -> int:
        """``N * total signed mass`` as an exact integer."""
        return int(self.signs[self.alive].astype(np.int64).sum())

    @property
    def n_alive(self) -> int:
        return int(np.count_nonzero(self.alive))


def _sorted_alive(positions, alive):
    idx = np.flatnonzero(alive)
    return idx[np.argsort(positions[idx], kind="stable")]


@dataclass(frozen=True)
class SignedCdf:
    """Right-continuous step function ``x -> sum_{alive, X <= x} sign / N``.

    ``cum_counts`` holds the partial sums of the signs (integers); values are
    ``cum_counts / n_total``.
    """

    breakpoints: np.ndarray
    cum_counts: np.ndarray
    n_total: int

    @property
    def cumulative(self) -> np.ndarray:
        return self.cum_counts / self.n_total

    @property
    def total_mass(self) -> float:
        return float(self.cum_counts[-1]) / self.n_total if self.cum_counts.size else 0.0

    def __call__(self, x):
        return evaluate_cdf(self, x)

    def to_piecewise(self, scale: float = 1.0, offset: float = 0.0) -> PiecewiseLinear:
        """``offset + scale * cdf`` as a :class:`PiecewiseLinear`."""
        if self.breakpoints.size == 0:
            return PiecewiseLinear.constant(offset)
        jumps = np.diff(np.concatenate([[0], self.cum_counts])) * (scale / self.n_total)
        return PiecewiseLinear.from_steps(self.breakpoints, jumps, base=offset)


def signed_cdf(state: ParticleState) -> SignedCdf:
    perm = state.sort_perm
    return SignedCdf(state.positions[perm].copy(),
                     np.cumsum(state.signs[perm].astype(np.int64)), state.n)


def evaluate_cdf(cdf: SignedCdf, x):
    """Sum of the weights of particles at positions ``<= x``."""
    xs = np.asarray(x, dtype=float)
    j = np.searchsorted(cdf.breakpoints, xs, side="right")
    padded = np.concatenate([[0], cdf.cum_counts])
    out = padded[j] / cdf.n_total
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class KillReport:
    """Victims of one killing pass; ``pairs[:, 0]`` is the left member."""

    t: float
    pairs: np.ndarray
    positions: np.ndarray
    signs: np.ndarray

    @property
    def n_pairs(self) -> int:
        return int(self.pairs.shape[0])


def kill_pairs(state: ParticleState, eps: float, t: float) -> tuple[ParticleState, KillReport]:
    """Kill opposite-sign consecutive couples closer than ``eps`` (strict)."""
    if not eps > 0:
        raise ValueError("killing threshold must be positive")
    perm = state.sort_perm
    empty = np.empty((0, 2), dtype=np.int64)
    if perm.size < 2:
        return state, KillReport(t, empty, np.empty((0, 2)), np.empty((0, 2), dtype=np.int8))
    local = _kill_scan(state.positions[perm], state.signs[perm], float(eps))
    if local.shape[0] == 0:
        return state, KillReport(t, empty, np.empty((0, 2)), np.empty((0, 2), dtype=np.int8))
    victims = perm[local]
    new = state.copy()
    flat = victims.ravel()
    new.alive[flat] = False
    new.death_time[flat] = t
    keep = np.ones(perm.size, dtype=bool)
    keep[local.ravel()] = False
    new.sort_perm = perm[keep]
    report = KillReport(t, victims, state.positions[victims], state.signs[victims])
    return new, report


def init_particles(init: SignedBVInitial, n: int, eps: float, rng: np.random.Generator,
                   stratified: bool = False) -> ParticleState:
    """Sample ``n`` particles from ``|u0|`` and run the time-0 killing pass
    (victims get ``death_time == 0``)."""
    if n < 1:
        raise ValueError("need at least one particle")
    if not init.is_normalized:
        raise ValueError("initial data must be normalized first")
    x0 = sample_positions(init, n, rng, stratified=stratified)
    signs = np.asarray(gamma_at(init, x0), dtype=np.int8)
    state = ParticleState(x0, signs, np.ones(n, dtype=bool), np.full(n, np.inf))
    return kill_pairs(state, eps, 0.0)[0]


def drift_cdf_values(state: ParticleState) -> np.ndarray:
    """``H * mu`` seen by each alive particle (sorted order).

    The sum runs over the particles up to and including this one in the
    sorted order, so particles sharing a position are treated as if
    separated in index order: a tied block spreads into a fan instead of
    moving rigidly (ties have probability zero in the model but are the
    rule for atoms when the noise is below floating-point resolution).
    """
    perm = state.sort_perm
    return np.cumsum(state.signs[perm].astype(np.int64)) / state.n


def euler_step(state: ParticleState, flux: FluxModel, sigma: float, alpha: float,
               h: float, driver: StableDriver | None) -> ParticleState:
    """One Euler step of length ``h`` for the alive particles.

    The driver is asked for one increment per particle index (dead ones
    included), so particle ``i`` always consumes entry ``i`` of each block.
    """
    if not h > 0:
        raise ValueError("time step must be positive")
    if sigma < 0:
        raise ValueError("diffusion coefficient must be nonnegative")
    new = state.copy()
    perm = state.sort_perm
    if perm.size:
        move = flux.dA(drift_cdf_values(state)) * h
        if sigma > 0:
            if driver is None or driver.alpha != alpha:
                raise ValueError("a driver with matching alpha is required when sigma > 0")
            noise = driver.sample(h, state.n)
            move = move + sigma * noise[perm]
        newpos = state.positions[perm] + move
        if not np.all(np.isfinite(newpos)):
            bad = perm[~np.isfinite(newpos)][0]
            raise NumericalAbort(f"particle {bad} left the real line at step {state.k + 1}")
        new.positions[perm] = newpos
        new.sort_perm = perm[np.argsort(newpos, kind="stable")]
        if not _ties_by_index(new):
            new.sort_perm = _sorted_alive(new.positions, new.alive)
    new.k = state.k + 1
    new.time = new.k * h
    return new


def _ties_by_index(state: ParticleState) -> bool:
    p = state.positions[state.sort_perm]
    tie = p[1:] == p[:-1]
    if not tie.any():
        return True
    idx = state.sort_perm
    return bool(np.all(idx[1:][tie] > idx[:-1][tie]))


def total_signed_mass(state: ParticleState) -> float:
    return state.mass_numerator / state.n


def total_variation(state: ParticleState) -> float:
    return state.n_alive / state.n


def check_kill_invariants(before: ParticleState, after: ParticleState,
                          report: KillReport, eps: float) -> list[str]:
    """Violations of the killing properties for one pass (empty if none)."""
    bad = []
    if before.mass_numerator != after.mass_numerator:
        bad.append(f"t={report.t}: signed mass changed "
                   f"{before.mass_numerator} -> {after.mass_numerator}")
    if after.n_alive != before.n_alive - 2 * report.n_pairs:
        bad.append(f"t={report.t}: alive count does not match reported pairs")
    if report.n_pairs:
        s = report.signs
        if np.any(s[:, 0] == s[:, 1]):
            bad.append(f"t={report.t}: killed pair with equal signs")
        d = report.positions[:, 1] - report.positions[:, 0]
        if np.any(d >= eps) or np.any(d < 0):
            bad.append(f"t={report.t}: killed pair at distance outside [0, eps)")
        if np.unique(report.pairs).size != report.pairs.size:
            bad.append(f"t={report.t}: a particle was killed twice")
    perm = after.sort_perm
    p, sg = after.positions[perm], after.signs[perm]
    close = (sg[1:] != sg[:-1]) & (np.diff(p) < eps)
    if close.any():
        bad.append(f"t={report.t}: {int(close.sum())} opposite-sign neighbours closer than eps survive")
    if report.n_pairs and perm.size:
        # the CDF seen by each survivor (ties resolved by the sort order, as
        # in the drift) must not change: exact integer comparison
        cum_before = np.zeros(before.n, dtype=np.int64)
        cum_before[before.sort_perm] = np.cumsum(before.signs[before.sort_perm].astype(np.int64))
        cum_after = np.cumsum(after.signs[perm].astype(np.int64))
        if np.any(cum_before[perm] != cum_after):
            bad.append(f"t={report.t}: CDF changed at a surviving particle")
    return bad


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one particle run (initial data must be normalized)."""

    init: SignedBVInitial
    flux: FluxModel
    n: int
    h: float
    eps: float
    T: float
    sigma: float
    alpha: float
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("N must be >= 1")
        for name in ("h", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.T < 0 or self.sigma < 0:
            raise ValueError("T and sigma must be nonnegative")
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.h + 1e-9))


@dataclass
class SimulationResult:
    config: SimulationConfig
    snapshots: list
    kill_reports: list
    mass_numerators: list
    alive_counts: list
    final_state: ParticleState
    violations: list

    def times(self):
        return [t for t, _ in self.snapshots]


def run_simulation(config: SimulationConfig, snapshot_times=None, callback=None,
                   check_invariants: bool = False) -> SimulationResult:
    """Alternate killing and Euler steps on the grid ``{k h, k h <= T}``.

    A snapshot (post-kill CDF) is taken at every grid time, or only at the
    grid times closest to ``snapshot_times`` when given. ``callback(t, cdf,
    state)`` is invoked at every grid time after the kill.
    """
    c = config
    streams = np.random.SeedSequence(c.seed).spawn(2)
    init_rng = np.random.Generator(np.random.PCG64(streams[0]))
    driver = StableDriver(c.alpha, seed=c.seed, stream_id=1) if c.sigma > 0 else None
    n_steps = c.n_steps
    if snapshot_times is None:
        wanted = None
    else:
        wanted = {int(round(t / c.h)) for t in snapshot_times}
    # time-0 sampling and killing
    x0 = sample_positions(c.init, c.n, init_rng, stratified=c.stratified)
    signs = np.asarray(gamma_at(c.init, x0), dtype=np.int8)
    state = ParticleState(x0, signs, np.ones(c.n, dtype=bool), np.full(c.n, np.inf))
    snapshots, reports, masses, alive, violations = [], [], [state.mass_numerator], [state.n_alive], []
    for k in range(n_steps + 1):
        t = k * c.h
        killed, report = kill_pairs(state, c.eps, t)
        if check_invariants:
            violations += check_kill_invariants(state, killed, report, c.eps)
        state = killed
        if report.n_pairs:
            reports.append(report)
        masses.append(state.mass_numerator)
        alive.append(state.n_alive)
        cdf = None
        if wanted is None or k in wanted:
            cdf = signed_cdf(state)
            snapshots.append((t, cdf))
        if callback is not None:
            callback(t, cdf if cdf is not None else signed_cdf(state), state)
        if k < n_steps:
            state = euler_step(state, c.flux, c.sigma, c.alpha, c.h, driver)
    if check_invariants:
        if len(set(masses)) != 1:
            violations.append("signed mass not constant over the run")
        if any(b > a for a, b in zip(alive, alive[1:])):
            violations.append("total variation increased")
        dead = ~state.alive
        if np.count_nonzero(dead) % 2:
            violations.append("odd number of dead particles")
    return SimulationResult(c, snapshots, reports, masses, alive, state, violations)
