r"""Error metrics, convergence slopes, weak/entropy residuals and the
validator for the hypotheses of the three convergence theorems.

Profiles are handled as :class:`~fraccl.piecewise.PiecewiseLinear`
functions; particle CDFs (:class:`~fraccl.particles.SignedCdf`), grid
interpolants and the exact Burgers profiles all convert to that form, so
the weighted :math:`L^1(dx/(1+x^2))` distance can be integrated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import CubicSpline

from .initial_data import FluxModel
from .particles import SignedCdf
from .piecewise import PiecewiseLinear
from .reference import Grid1D, _quadrature_weights, apply_fractional_laplacian, levy_constant

__all__ = [
    "ErrorReport",
    "RegimeReport",
    "Bump",
    "TestFunction",
    "Entropy",
    "SpaceTimeSolution",
    "as_piecewise",
    "weighted_l1_distance",
    "time_integrated_error",
    "convergence_slope",
    "mean_and_stderr",
    "entropy_flux",
    "weak_residual",
    "WeakResidualTerms",
    "WeakResidualAccumulator",
    "entropy_residual",
    "validate_theorem_hypotheses",
]


# -- conversions ------------------------------------------------------------------

def as_piecewise(f, x_lo: float | None = None, x_hi: float | None = None,
                 n: int = 4001) -> PiecewiseLinear:
    """``SignedCdf`` / ``PiecewiseLinear`` as is; other callables are sampled
    at ``n`` points of ``[x_lo, x_hi]`` and linearly interpolated."""
    if isinstance(f, PiecewiseLinear):
        return f
    if isinstance(f, SignedCdf):
        return f.to_piecewise()
    if callable(f):
        if x_lo is None or x_hi is None or not x_lo < x_hi:
            raise ValueError("sampling a callable needs a window x_lo < x_hi")
        xs = np.linspace(x_lo, x_hi, n)
        return PiecewiseLinear.from_points(xs, np.asarray(f(xs), dtype=float))
    raise TypeError(f"cannot interpret {type(f).__name__} as a profile")


# -- weighted L1 ------------------------------------------------------------------

def _signed_integral(a, b, fa, fb):
    """``int_a^b (affine from fa to fb) / (1 + x^2) dx``."""
    width = b - a
    ok = width > 0
    q = np.divide(fb - fa, width, out=np.zeros(np.shape(width)), where=ok)
    p = fa - q * a
    d_atan = np.arctan2(width, 1.0 + a * b)
    d_log = np.log1p(b * b) - np.log1p(a * a)
    return np.where(ok, p * d_atan + 0.5 * q * d_log, 0.0)


def _abs_weighted_integral(a, b, fa, fb):
    out = np.zeros(a.shape)
    nz = (b > a) & ((fa != 0) | (fb != 0))
    a, b, fa, fb = a[nz], b[nz], fa[nz], fb[nz]
    cross = fa * fb < 0
    same = ~cross
    res = np.empty(a.shape)
    res[same] = np.abs(_signed_integral(a[same], b[same], fa[same], fb[same]))
    if cross.any():
        ac, bc, fac, fbc = a[cross], b[cross], fa[cross], fb[cross]
        root = ac + (bc - ac) * fac / (fac - fbc)
        zero = np.zeros(root.shape)
        res[cross] = (np.abs(_signed_integral(ac, root, fac, zero))
                      + np.abs(_signed_integral(root, bc, zero, fbc)))
    out[nz] = res
    return out


def weighted_l1_distance(F, G, x_lo: float | None = None, x_hi: float | None = None) -> float:
    r""":math:`\int_{\mathbb R} |F - G|\,dx / (1 + x^2)`.

    Piecewise-linear inputs (including particle CDFs) are integrated
    exactly: on each interval between merged knots the difference is
    affine, and :math:`(p + qx)/(1+x^2)` has the antiderivative
    :math:`p\arctan x + \tfrac q2\log(1+x^2)` (intervals are split where the
    difference changes sign). The constant tails contribute
    :math:`|F - G|(\pm\infty)\,(\pi/2 - \arctan|x|)`. Plain callables are
    sampled on ``[x_lo, x_hi]`` first.
    """
    d = as_piecewise(F, x_lo, x_hi) - as_piecewise(G, x_lo, x_hi)
    x, yl, yr = d.x, d.y_left, d.y_right
    total = abs(yl[0]) * math.atan2(1.0, -x[0]) + abs(yr[-1]) * math.atan2(1.0, x[-1])
    if x.size > 1:
        total += float(_abs_weighted_integral(x[:-1], x[1:], yr[:-1], yl[1:]).sum())
    if not math.isfinite(total):
        raise ValueError("non-finite weighted L1 distance")
    return total


@dataclass
class ErrorReport:
    """Weighted-L1 errors at grid times and their Riemann sum."""

    per_time: list
    integrated: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        """``(t, weighted_l1)`` rows."""
        return list(self.per_time)


def time_integrated_error(snapshots, reference, T: float, h: float | None = None,
                          scale: float = 1.0, offset: float = 0.0, meta=None,
                          tol: float = 1e-9) -> ErrorReport:
    """Per-time weighted-L1 errors and ``h * sum`` over the snapshots with
    ``t <= T``.

    ``reference(t)`` must return the reference profile at time ``t`` (a
    :class:`PiecewiseLinear`, e.g. :func:`~fraccl.reference.exact_inviscid_burgers_profile`
    or a :class:`~fraccl.reference.ReferenceSolution`). Snapshot profiles are
    mapped through ``offset + scale * F`` first (use ``scale = tv`` to
    compare in the variables of the raw datum). Snapshot times must lie on
    the grid ``{k h}``; ``h`` defaults to the snapshot spacing.
    """
    snaps = [(float(t), F) for t, F in snapshots if t <= T + tol]
    if not snaps:
        raise ValueError("no snapshot at or before T")
    times = np.array([t for t, _ in snaps])
    if h is None:
        if times.size < 2:
            raise ValueError("h is required with a single snapshot")
        h = float(np.min(np.diff(times)))
    if not h > 0:
        raise ValueError("h must be positive")
    k = np.round(times / h)
    if np.any(np.abs(times - k * h) > tol * max(1.0, T)):
        raise ValueError("snapshot times do not lie on the grid {k h}")
    per_time = []
    for t, F in snaps:
        prof = as_piecewise(F).scaled(scale, offset)
        per_time.append((t, weighted_l1_distance(prof, reference(t))))
    integrated = h * sum(e for _, e in per_time)
    return ErrorReport(per_time, integrated, dict(meta or {}))


def convergence_slope(points):
    """Least-squares fit of ``log(error)`` against ``log(scale)``.

    Returns ``(slope, intercept, r_squared)`` (natural logarithms).
    """
    pts = [(float(s), float(e)) for s, e in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    s = np.array([p[0] for p in pts])
    e = np.array([p[1] for p in pts])
    if np.any(s <= 0) or np.any(e <= 0) or not np.all(np.isfinite(s * e)):
        raise ValueError("scales and errors must be positive and finite")
    fit = stats.linregress(np.log(s), np.log(e))
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def mean_and_stderr(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


# -- test functions -----------------------------------------------------------------

@dataclass(frozen=True)
class Bump:
    """Smooth bump ``amp * exp(1 - 1 / (1 - s^2))``, ``s = (x - center) / halfwidth``."""

    center: float
    halfwidth: float
    amp: float = 1.0

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError("halfwidth must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.halfwidth, self.center + self.halfwidth

    def _s(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.halfwidth
        inside = np.abs(s) < 1
        return s, inside

    def __call__(self, x):
        s, inside = self._s(x)
        out = np.zeros(s.shape)
        si = s[inside]
        out[inside] = self.amp * np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out if out.ndim else float(out)

    def deriv(self, x):
        s, inside = self._s(x)
        out = np.zeros(s.shape)
        si = s[inside]
        val = self.amp * np.exp(1.0 - 1.0 / (1.0 - si * si))
        out[inside] = val * (-2.0 * si / (1.0 - si * si) ** 2) / self.halfwidth
        return out if out.ndim else float(out)

    def deriv2(self, x):
        s, inside = self._s(x)
        out = np.zeros(s.shape)
        si = s[inside]
        om = 1.0 - si * si
        val = self.amp * np.exp(1.0 - 1.0 / om)
        q = -2.0 * si / om ** 2
        dq = -2.0 / om ** 2 - 8.0 * si * si / om ** 3
        out[inside] = val * (q * q + dq) / self.halfwidth ** 2
        return out if out.ndim else float(out)

    def integral(self, lo: float, hi: float, n: int = 64) -> float:
        a, b = max(lo, self.support[0]), min(hi, self.support[1])
        if not b > a:
            return 0.0
        z, w = np.polynomial.legendre.leggauss(n)
        m = max(1, int(math.ceil((b - a) / self.halfwidth * 4)))
        edges = np.linspace(a, b, m + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * np.diff(edges)[:, None]
        return float(np.sum(w * self(mid + half * z) * half))


@dataclass(frozen=True)
class TestFunction:
    """Separable test function ``g(t, x) = phi(t) psi(x)`` with ``phi, psi >= 0`` bumps."""

    phi: Bump
    psi: Bump

    __test__ = False  # not a pytest class

    def __call__(self, t, x):
        return self.phi(t) * self.psi(x)

    @property
    def t_support(self):
        return self.phi.support

    @property
    def x_support(self):
        return self.psi.support


@dataclass(frozen=True)
class Entropy:
    """Convex entropy ``eta`` with derivative ``deta``."""

    eta: Callable
    deta: Callable
    name: str = "custom"

    @classmethod
    def quadratic(cls) -> "Entropy":
        return cls(lambda u: np.asarray(u) ** 2, lambda u: 2.0 * np.asarray(u), "x^2")

    @classmethod
    def linear(cls, sign: float = 1.0) -> "Entropy":
        s = float(sign)
        return cls(lambda u: s * np.asarray(u, dtype=float),
                   lambda u: np.full(np.shape(u), s), f"{s:+g}x")

    @property
    def is_linear_positive(self) -> bool:
        return self.name == "+1x"


def entropy_flux(entropy: Entropy, flux: FluxModel, lo: float = -1.0, hi: float = 1.0,
                 n: int = 2001) -> Callable:
    r"""``psi(u) = int_0^u eta'(s) A'(s) ds`` tabulated by adaptive
    quadrature on ``[lo, hi]`` (which must contain 0) and spline-interpolated."""
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    if hi - lo < 1e-12:
        hi, lo = 1e-6, -1e-6
    us = np.linspace(lo, hi, n)
    f = lambda s: float(entropy.deta(s)) * float(flux.dA(s))
    pieces = np.array([integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12)[0]
                       for a, b in zip(us[:-1], us[1:])])
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    cum -= np.interp(0.0, us, cum)
    spline = CubicSpline(us, cum)

    def psi(u):
        u = np.asarray(u, dtype=float)
        if u.size and (u.min() < lo - 1e-9 or u.max() > hi + 1e-9):
            raise ValueError("entropy flux evaluated outside its table")
        return spline(u)

    return psi


# -- space-time solutions -------------------------------------------------------------

@dataclass
class SpaceTimeSolution:
    """``v(t)`` as a constant profile on each time cell ``[a, b)``.

    ``cells`` is a list of ``(a, b, PiecewiseLinear)``; ``initial`` is
    ``v(0)``.
    """

    initial: PiecewiseLinear
    cells: list

    @property
    def t_end(self) -> float:
        return self.cells[-1][1] if self.cells else 0.0

    @classmethod
    def from_snapshots(cls, snapshots, scale: float = 1.0, offset: float = 0.0,
                       t_end: float | None = None) -> "SpaceTimeSolution":
        """Snapshots at grid times; each is held until the next one (the last
        one until ``t_end``, default: one more grid step)."""
        snaps = sorted(((float(t), as_piecewise(F).scaled(scale, offset)) for t, F in snapshots),
                       key=lambda p: p[0])
        if not snaps or snaps[0][0] != 0.0:
            raise ValueError("snapshots must start at t = 0")
        times = [t for t, _ in snaps]
        if t_end is None:
            t_end = times[-1] + (times[-1] - times[-2] if len(times) > 1 else 0.0)
        ends = times[1:] + [t_end]
        cells = [(a, b, prof) for (a, prof), b in zip(snaps, ends) if b > a]
        return cls(snaps[0][1], cells)

    @classmethod
    def from_profile(cls, profile: Callable, T: float, dt: float) -> "SpaceTimeSolution":
        """Sample a continuous-in-time profile ``t -> PiecewiseLinear`` at the
        midpoints of cells of length ``dt`` (second order in ``dt``)."""
        m = max(1, int(round(T / dt)))
        edges = np.linspace(0.0, T, m + 1)
        cells = [(a, b, profile(0.5 * (a + b))) for a, b in zip(edges[:-1], edges[1:])]
        return cls(profile(0.0), cells)

    @classmethod
    def stationary(cls, profile: PiecewiseLinear, T: float) -> "SpaceTimeSolution":
        return cls(profile, [(0.0, T, profile)])


def _coerce_solution(solution) -> SpaceTimeSolution:
    if isinstance(solution, SpaceTimeSolution):
        return solution
    return SpaceTimeSolution.from_snapshots(solution)


def _space_nodes(v: PiecewiseLinear, lo: float, hi: float, dx: float, n: int):
    """Gauss-Legendre nodes/weights on ``[lo, hi]`` with every knot of ``v``
    as a break point and subintervals no longer than ``dx``."""
    m = max(1, int(math.ceil((hi - lo) / dx)))
    inner = v.x[(v.x > lo) & (v.x < hi)]
    pts = np.union1d(np.linspace(lo, hi, m + 1), inner)
    a, b = pts[:-1], pts[1:]
    z, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    return (mid + half * z).ravel(), (half * w).ravel()


def _time_weights(phi: Bump, a: float, b: float, n: int = 4) -> float:
    return phi.integral(a, b, n=n)


def _check_cells(sol: SpaceTimeSolution, g: TestFunction):
    if g.t_support[1] > sol.t_end + 1e-12:
        raise ValueError("test function support extends beyond the last snapshot time")
    if g.t_support[0] < 0 and sol.initial is None:
        raise ValueError("an initial profile is required when g does not vanish at t = 0")


class _FracAntiderivative:
    r"""``G(x) = int_x^inf (-Delta)^{alpha/2} psi``.

    On a box around the support of ``psi`` the integrand comes from the
    quadrature fractional Laplacian and is integrated cumulatively from the
    right; outside the box closed forms are used:
    ``G(x) = -(c/alpha) int psi(z) (x - z)^{-alpha} dz`` right of the
    support and ``+(c/alpha) int psi(z) (z - x)^{-alpha} dz`` left of it.
    For ``alpha = 2`` simply ``G = psi'``.
    """

    def __init__(self, psi: Bump, alpha: float, resolution: int = 4096):
        self.psi, self.alpha = psi, alpha
        if alpha == 2.0:
            return
        self.c = levy_constant(alpha)
        lo, hi = psi.support
        width = hi - lo
        self.box = (lo - width, hi + width)
        z, w = np.polynomial.legendre.leggauss(256)
        self._zn = 0.5 * (lo + hi) + 0.5 * width * z
        self._zw = 0.5 * width * w * psi(self._zn)
        grid = Grid1D.from_function(psi, self.box[0], self.box[1], resolution)
        L = apply_fractional_laplacian(grid, alpha, method="quadrature").values
        xc = grid.centers
        right = self._analytic(np.array([xc[-1]]))[0]
        # cumulative trapezoid from the right end
        seg = 0.5 * (L[1:] + L[:-1]) * grid.dx
        G = right + np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        self._xc = xc
        self._spline = CubicSpline(xc, G)
        self.left_mismatch = float(G[0] - self._analytic(np.array([xc[0]]))[0])

    def _analytic(self, x):
        lo, hi = self.psi.support
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        for sl in np.array_split(np.arange(x.size), max(1, x.size // 4096)):
            xs = x[sl][:, None]
            d = xs - self._zn[None, :]
            rightside = xs[:, 0] >= hi
            val = np.where(rightside[:, None], -np.abs(d) ** (-self.alpha),
                           np.abs(d) ** (-self.alpha))
            out[sl] = (self.c / self.alpha) * (val @ self._zw)
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha == 2.0:
            return self.psi.deriv(x)
        out = np.empty(x.shape)
        inside = (x >= self._xc[0]) & (x <= self._xc[-1])
        out[inside] = self._spline(x[inside])
        if (~inside).any():
            out[~inside] = self._analytic(x[~inside])
        return out


def _stieltjes_G(v: PiecewiseLinear, G: Callable, n: int = 5, dx: float = 0.05) -> float:
    """``int G dv`` for piecewise-linear ``v`` (jumps plus ramps)."""
    jumps = v.y_right - v.y_left
    nz = jumps != 0
    total = float(np.dot(jumps[nz], G(v.x[nz]))) if nz.any() else 0.0
    if v.x.size > 1:
        slope = (v.y_left[1:] - v.y_right[:-1]) / np.diff(v.x)
        ramp = slope != 0
        if ramp.any():
            a, b = v.x[:-1][ramp], v.x[1:][ramp]
            z, w = np.polynomial.legendre.leggauss(n)
            # refine long ramps
            reps = np.maximum(1, np.ceil((b - a) / dx)).astype(int)
            aa = np.repeat(a, reps) + (np.concatenate([np.arange(r) for r in reps])
                                      * np.repeat((b - a) / reps, reps))
            hh = np.repeat((b - a) / reps, reps)
            ss = np.repeat(slope[ramp], reps)
            nodes = (aa + 0.5 * hh)[:, None] + 0.5 * hh[:, None] * z
            total += float(np.sum(ss[:, None] * 0.5 * hh[:, None] * w * G(nodes.ravel()).reshape(nodes.shape)))
    return total


class WeakResidualTerms:
    """Per-cell contributions to :func:`weak_residual` for a fixed test
    function (the nonlocal antiderivative is built once)."""

    def __init__(self, g: TestFunction, alpha: float, sigma: float, flux: FluxModel,
                 dx: float = 1e-3, n_gauss: int = 3):
        if not 0 < alpha <= 2 or sigma < 0:
            raise ValueError("need 0 < alpha <= 2 and sigma >= 0")
        self.g, self.alpha, self.sigma, self.flux = g, alpha, sigma, flux
        self.dx, self.n_gauss = dx, n_gauss
        self.G = _FracAntiderivative(g.psi, alpha) if sigma > 0 else None

    def initial(self, v0: PiecewiseLinear) -> float:
        phi0 = float(self.g.phi(0.0))
        if phi0 == 0.0:
            return 0.0
        lo, hi = self.g.x_support
        x, w = _space_nodes(v0, lo, hi, self.dx, self.n_gauss)
        return phi0 * float(np.sum(w * v0(x) * self.g.psi(x)))

    def cell(self, a: float, b: float, v: PiecewiseLinear) -> float:
        t_lo, t_hi = self.g.t_support
        if b <= t_lo or a >= t_hi:
            return 0.0
        phi, psi = self.g.phi, self.g.psi
        lo, hi = self.g.x_support
        dphi = float(phi(b)) - float(phi(a))
        Phi = _time_weights(phi, a, b)
        x, w = _space_nodes(v, lo, hi, self.dx, self.n_gauss)
        vx = v(x)
        term = dphi * float(np.sum(w * vx * psi(x)))
        term += Phi * float(np.sum(w * self.flux.A(vx) * psi.deriv(x)))
        if self.G is not None:
            term -= Phi * self.sigma ** self.alpha * _stieltjes_G(v, self.G)
        return term


class WeakResidualAccumulator:
    """Streaming :func:`weak_residual` for particle runs: pass as the
    ``callback`` of :func:`~fraccl.particles.run_simulation`; each grid-time
    CDF is held on ``[t, t + h)``. ``scale``/``offset`` map the CDF to the
    variables of ``flux``."""

    def __init__(self, g: TestFunction, alpha: float, sigma: float, flux: FluxModel,
                 h: float, scale: float = 1.0, offset: float = 0.0, **kw):
        self.terms = WeakResidualTerms(g, alpha, sigma, flux, **kw)
        self.h, self.scale, self.offset = h, scale, offset
        self.value = 0.0
        self.t_last = None

    def __call__(self, t, cdf, state=None):
        v = as_piecewise(cdf).scaled(self.scale, self.offset)
        if t == 0:
            self.value += self.terms.initial(v)
        self.value += self.terms.cell(t, t + self.h, v)
        self.t_last = t

    def result(self) -> float:
        if self.t_last is None or self.terms.g.t_support[1] > self.t_last + self.h + 1e-12:
            raise ValueError("test function support extends beyond the simulated times")
        return self.value


def weak_residual(solution, g: TestFunction, alpha: float, sigma: float, flux: FluxModel,
                  dx: float = 1e-3, n_gauss: int = 3) -> float:
    r"""Left-hand side of the weak formulation

    .. math:: \int v_0 g_0 + \iint v\,\partial_t g
              - \sigma^\alpha\iint v\,(-\Delta)^{\alpha/2}g + \iint A(v)\partial_x g

    for ``v`` held constant on the cells of ``solution`` (a
    :class:`SpaceTimeSolution` or a list of ``(t, profile)`` snapshots).
    Time integrals of ``phi`` and ``phi'`` are exact per cell; space
    integrals use Gauss-Legendre on ``supp psi`` with the knots of ``v`` as
    break points. The nonlocal term is written ``int G dv`` with
    ``G = int_x^inf (-Delta)^{alpha/2} psi``, which covers the whole line.
    """
    sol = _coerce_solution(solution)
    _check_cells(sol, g)
    terms = WeakResidualTerms(g, alpha, sigma, flux, dx, n_gauss)
    total = terms.initial(sol.initial)
    for a, b, v in sol.cells:
        total += terms.cell(a, b, v)
    return total


def _small_jump_operator(psi: Bump, alpha: float, rho: float, resolution: int = 4096):
    r"""Spline of ``c int_{|z|<=rho} (psi(x+z) - psi(x) - z psi'(x)) |z|^{-1-alpha} dz``."""
    lo, hi = psi.support
    xs = np.linspace(lo - rho, hi + rho, resolution)
    K = 400
    dz = rho / K
    wts = _quadrature_weights(alpha, dz, K)
    z = dz * np.arange(1, K + 1)
    vals = np.empty(xs.size)
    p0 = psi(xs)
    for sl in np.array_split(np.arange(xs.size), max(1, xs.size // 256)):
        xx = xs[sl][:, None]
        f = psi(xx + z) + psi(xx - z) - 2.0 * p0[sl][:, None]
        vals[sl] = f @ wts
    # the cut-off kernel integrates f / y^{1+alpha} only up to rho (no tail)
    spline = CubicSpline(xs, levy_constant(alpha) * vals)

    def op(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        m = (x >= xs[0]) & (x <= xs[-1])
        out[m] = spline(x[m])
        return out

    return op, (xs[0], xs[-1])


def _large_jump_field(v: PiecewiseLinear, x: np.ndarray, alpha: float, rho: float) -> np.ndarray:
    r"""``J(x) = c int_{|z|>rho} (v(x+z) - v(x)) |z|^{-1-alpha} dz`` for
    piecewise-linear ``v``: ``(c/alpha) int sgn(y - x) max(rho, |y-x|)^{-alpha} dv(y)``."""
    c = levy_constant(alpha) / alpha
    jumps = v.y_right - v.y_left
    nz = jumps != 0
    xj, dj = v.x[nz], jumps[nz]
    slope = (v.y_left[1:] - v.y_right[:-1]) / np.diff(v.x) if v.x.size > 1 else np.empty(0)
    ramp = slope != 0
    ra, rb, rs = v.x[:-1][ramp], v.x[1:][ramp], slope[ramp]

    def S(d):  # even antiderivative of sgn(t) max(rho, |t|)^{-alpha}
        ad = np.abs(d)
        inner = ad * rho ** (-alpha)
        if alpha == 1.0:
            outer = 1.0 + np.log(np.maximum(ad, rho) / rho)
        else:
            outer = rho ** (1 - alpha) + (np.maximum(ad, rho) ** (1 - alpha) - rho ** (1 - alpha)) / (1 - alpha)
        return np.where(ad <= rho, inner, outer)

    out = np.empty(x.size)
    for sl in np.array_split(np.arange(x.size), max(1, x.size // 512)):
        xx = x[sl][:, None]
        acc = np.zeros(xx.shape[0])
        if xj.size:
            d = xj[None, :] - xx
            k = np.where(d > 0, 1.0, -1.0) * np.maximum(rho, np.abs(d)) ** (-alpha)
            acc += k @ dj
        if ra.size:
            acc += (S(rb[None, :] - xx) - S(ra[None, :] - xx)) @ rs * 1.0
        out[sl] = c * acc
    # ramps: int_a^b sgn(y-x) K dy = S(b-x) - S(a-x) holds because S is the
    # antiderivative of the odd kernel in d (S even, S' = kernel)
    return out


def entropy_residual(solution, g: TestFunction, entropy: Entropy, r: float, alpha: float,
                     sigma: float, flux: FluxModel, dx: float = 1e-3,
                     n_gauss: int = 3) -> float:
    r"""Left-hand side of the entropy inequality (nonnegative for entropy
    solutions):

    .. math:: \int\eta(v_0)g_0 + \iint \eta(v)\partial_t g + \psi_\eta(v)\partial_x g
       + \sigma^\alpha c_\alpha\iint\int_{|z|>\rho}\eta'(v(x))
         \frac{v(x+z)-v(x)}{|z|^{1+\alpha}}\,g
       + \sigma^\alpha c_\alpha\iint\int_{|z|\le\rho}\eta(v)
         \frac{g(x+z)-g(x)-z\partial_xg}{|z|^{1+\alpha}}

    with ``rho = sigma * r`` (the jumps of ``sigma L`` split at ``sigma r``)
    and ``psi_eta' = eta' A'``. For ``alpha = 2`` the nonlocal terms become
    ``sigma^2 iint eta(v) g_xx``. With ``sigma = 0`` only the inviscid terms
    remain.
    """
    if not r > 0:
        raise ValueError("cut-off r must be positive")
    if not 0 < alpha <= 2 or sigma < 0:
        raise ValueError("need 0 < alpha <= 2 and sigma >= 0")
    if g.phi.amp < 0 or g.psi.amp < 0:
        raise ValueError("entropy test functions must be nonnegative")
    sol = _coerce_solution(solution)
    _check_cells(sol, g)
    lo, hi = g.x_support
    phi, psi = g.phi, g.psi
    rho = sigma * r
    vmin = min(min(float(v.y_left.min()), float(v.y_right.min())) for _, _, v in sol.cells)
    vmax = max(max(float(v.y_left.max()), float(v.y_right.max())) for _, _, v in sol.cells)
    vmin = min(vmin, float(sol.initial.y_left.min()), float(sol.initial.y_right.min()))
    vmax = max(vmax, float(sol.initial.y_left.max()), float(sol.initial.y_right.max()))
    pad = 1e-6 + 1e-3 * (vmax - vmin)
    q = entropy_flux(entropy, flux, vmin - pad, vmax + pad)
    nonlocal_on = sigma > 0
    if nonlocal_on and alpha < 2:
        small, (slo, shi) = _small_jump_operator(psi, alpha, rho)
    total = 0.0
    phi0 = float(phi(0.0))
    if phi0 != 0.0:
        x, w = _space_nodes(sol.initial, lo, hi, dx, n_gauss)
        total += phi0 * float(np.sum(w * entropy.eta(sol.initial(x)) * psi(x)))
    t_lo, t_hi = g.t_support
    for a, b, v in sol.cells:
        if b <= t_lo or a >= t_hi:
            continue
        dphi = float(phi(b)) - float(phi(a))
        Phi = _time_weights(phi, a, b)
        x, w = _space_nodes(v, lo, hi, dx, n_gauss)
        vx = v(x)
        term = dphi * float(np.sum(w * entropy.eta(vx) * psi(x)))
        term += Phi * float(np.sum(w * q(vx) * psi.deriv(x)))
        if nonlocal_on:
            if alpha == 2.0:
                term += Phi * sigma ** 2 * float(np.sum(w * entropy.eta(vx) * psi.deriv2(x)))
            else:
                J = _large_jump_field(v, x, alpha, rho)
                term += Phi * sigma ** alpha * float(np.sum(w * entropy.deta(vx) * J * psi(x)))
                xs, ws = _space_nodes(v, slo, shi, dx, n_gauss)
                term += Phi * sigma ** alpha * float(np.sum(ws * entropy.eta(v(xs)) * small(xs)))
        total += term
    return total


# -- theorem regimes --------------------------------------------------------------

@dataclass
class RegimeReport:
    """Numerical check of the hypotheses of the three convergence theorems.

    ``checks`` rows are ``(name, lhs, rhs, passed)`` for the regime under
    consideration; ``theorem`` names it when every check passes and is
    ``"none"`` otherwise.
    """

    lam: float
    checks: list
    theorem: str
    applicable: dict = field(default_factory=dict)

    def failed(self):
        return [c for c in self.checks if not c[3]]

    def table(self) -> str:
        lines = [f"{'check':<34} {'lhs':>14} {'rhs':>14}  ok"]
        for name, lhs, rhs, ok in self.checks:
            lines.append(f"{name:<34} {lhs:>14.6g} {rhs:>14.6g}  {'yes' if ok else 'NO'}")
        lines.append(f"lambda = {self.lam:g}; applicable theorem: {self.theorem}")
        return "\n".join(lines)


def _le(lhs, rhs, rtol=1e-12):
    return lhs <= rhs * (1 + rtol) + 1e-300


def validate_theorem_hypotheses(N: int, h: float, eps: float, sigma: float, alpha: float,
                                lam: float = 2.0, flux: FluxModel | None = None,
                                vanishing_viscosity: bool = False) -> RegimeReport:
    r"""Evaluate the parameter inequalities of the convergence theorems.

    * constant viscosity, ``alpha <= 1`` (thm1): ``N^-lam <= 4 sup|A'| h <= eps``
      and ``N^{-1/alpha} <= N^{-1/lam} eps`` (``alpha = 1`` also
      ``h <= eps N^{-1/lam}``);
    * vanishing viscosity (thm2): ``N^-lam <= 4 sup|A'| h <= eps``, plus
      ``sigma <= eps^{1-1/alpha} N^{-1/lam}`` when ``alpha > 1``;
    * constant viscosity, ``1 < alpha <= 2`` (thm3): no rate constraint.

    ``sup|A'|`` is taken on ``[-1, 1]`` for the (normalized) flux.
    """
    if N < 1 or not h > 0 or not eps > 0 or sigma < 0 or not lam > 0:
        raise ValueError("need N >= 1, h > 0, eps > 0, sigma >= 0 and lambda > 0")
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    flux = flux or FluxModel.burgers()
    S = flux.sup_abs_Aprime
    N = float(N)
    rows = [("N^-lam <= 4 sup|A'| h", N ** -lam, 4 * S * h),
            ("4 sup|A'| h <= eps", 4 * S * h, eps)]
    if vanishing_viscosity:
        if alpha > 1:
            rows.append(("sigma <= eps^(1-1/alpha) N^(-1/lam)", sigma,
                         eps ** (1 - 1 / alpha) * N ** (-1 / lam)))
        target = "thm2"
    elif alpha <= 1:
        rows.append(("N^(-1/alpha) <= N^(-1/lam) eps", N ** (-1 / alpha), N ** (-1 / lam) * eps))
        if alpha == 1:
            rows.append(("h <= eps N^(-1/lam)", h, eps * N ** (-1 / lam)))
        target = "thm1"
    else:
        # constant viscosity with 1 < alpha <= 2: only vanishing h and eps
        rows = [("1 < alpha <= 2 (no rate condition)", alpha, 2.0)]
        target = "thm3"
    checks = [(n, float(l), float(r), _le(l, r)) for n, l, r in rows]
    ok = all(c[3] for c in checks)
    applicable = {target: ok}
    theorem = target if ok else "none"
    return RegimeReport(float(lam), checks, theorem, applicable)
