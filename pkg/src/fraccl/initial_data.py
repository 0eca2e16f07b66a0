"""Initial data and flux models.

The initial condition is ``v0 = a + H * u0`` with ``H = 1_[0, inf)`` and
``u0`` a finite signed measure made of point masses and constant-density
pieces. ``normalize`` rescales everything so that ``|u0|`` is a probability
measure and ``a = 0``; particles then carry weights ``gamma(X0) / N`` with
``gamma = du0 / d|u0|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from .piecewise import PiecewiseLinear

__all__ = [
    "SignedBVInitial",
    "FluxModel",
    "normalize",
    "sample_positions",
    "gamma_at",
    "cdf_v0",
    "riemann_datum",
    "unit_riemann_datum",
    "initial_profile",
    "two_bump_scale",
]


@dataclass(frozen=True)
class FluxModel:
    """Polynomial flux ``A`` with coefficients in increasing degree."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        if not coeffs or not all(np.isfinite(coeffs)):
            raise ValueError("flux coefficients must be a nonempty list of finite reals")
        # strip trailing zeros so equality is structural
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def burgers(cls) -> "FluxModel":
        return cls((0.0, 0.0, 0.5))

    @classmethod
    def polynomial(cls, coefficients) -> "FluxModel":
        return cls(tuple(coefficients))

    @property
    def kind(self) -> str:
        return "burgers" if self.coefficients == (0.0, 0.0, 0.5) else "polynomial"

    @cached_property
    def poly(self) -> Polynomial:
        return Polynomial(self.coefficients)

    @cached_property
    def dpoly(self) -> Polynomial:
        return self.poly.deriv()

    def A(self, u):
        return self.poly(np.asarray(u, dtype=float))

    def dA(self, u):
        return self.dpoly(np.asarray(u, dtype=float))

    def sup_abs_dA(self, lo: float = -1.0, hi: float = 1.0) -> float:
        """``max |A'|`` over ``[lo, hi]``, exact for polynomials."""
        cand = [lo, hi]
        if self.dpoly.degree() >= 2:
            for r in self.dpoly.deriv().roots():
                if abs(r.imag) < 1e-12 and lo <= r.real <= hi:
                    cand.append(r.real)
        return float(np.max(np.abs(self.dA(np.array(cand)))))

    @cached_property
    def sup_abs_Aprime(self) -> float:
        return self.sup_abs_dA(-1.0, 1.0)

    @cached_property
    def critical_points(self) -> np.ndarray:
        """Real roots of ``A'`` (candidate extrema for Godunov fluxes)."""
        if self.dpoly.degree() < 1:
            return np.empty(0)
        roots = self.dpoly.roots()
        return np.sort(roots[np.abs(roots.imag) < 1e-12].real)

    def rescaled(self, offset: float, scale: float) -> "FluxModel":
        """Flux ``x -> A(offset + scale * x) / scale``."""
        composed = self.poly(Polynomial([offset, scale])) / scale
        return FluxModel(tuple(composed.coef))


@dataclass(frozen=True)
class SignedBVInitial:
    """``v0 = offset_a + H * u0`` with ``u0`` = atoms + constant-density pieces.

    ``atoms`` is a sequence of ``(location, signed_mass)`` and ``pieces`` a
    sequence of ``(left, right, signed_density)``.
    """

    atoms: tuple = ()
    pieces: tuple = ()
    offset_a: float = 0.0
    _components: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        merged: dict[float, float] = {}
        for x, m in self.atoms:
            x, m = float(x), float(m)
            if not (np.isfinite(x) and np.isfinite(m)) or m == 0.0:
                raise ValueError(f"atom ({x}, {m}) must be finite with nonzero mass")
            if x in merged:
                if np.sign(merged[x]) != np.sign(m):
                    raise ValueError(f"opposite-sign atoms at {x}: pre-merge them")
                merged[x] += m
            else:
                merged[x] = m
        atoms = tuple(sorted(merged.items()))
        pieces = []
        for a, b, d in self.pieces:
            a, b, d = float(a), float(b), float(d)
            if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(d)):
                raise ValueError("piece bounds and density must be finite")
            if not a < b or d == 0.0:
                raise ValueError(f"piece ({a}, {b}, {d}) needs left < right and nonzero density")
            pieces.append((a, b, d))
        pieces = tuple(sorted(pieces))
        for (a0, b0, _), (a1, _, _) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise ValueError("pieces overlap")
        for x, _ in atoms:
            for a, b, _ in pieces:
                if a < x < b:
                    raise ValueError(f"atom at {x} lies inside piece ({a}, {b})")
        if not atoms and not pieces:
            raise ValueError("initial measure is empty (v0 constant)")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "offset_a", float(self.offset_a))
        comps = [(x, x, m, abs(m)) for x, m in atoms]
        comps += [(a, b, d, abs(d) * (b - a)) for a, b, d in pieces]
        comps.sort(key=lambda c: (c[0], c[1]))
        object.__setattr__(self, "_components", tuple(comps))

    @property
    def tv_raw(self) -> float:
        """Total variation ``|u0|(R)``."""
        return float(sum(c[3] for c in self._components))

    @property
    def total_mass(self) -> float:
        return float(sum(np.sign(c[2]) * c[3] for c in self._components))

    @property
    def is_normalized(self) -> bool:
        return self.offset_a == 0.0 and abs(self.tv_raw - 1.0) <= 1e-12

    @property
    def support(self) -> tuple[float, float]:
        return self._components[0][0], max(c[1] for c in self._components)


def normalize(raw: SignedBVInitial, flux: FluxModel) -> tuple[SignedBVInitial, FluxModel]:
    """Rescale to ``|u0|(R) = 1`` and ``a = 0``; the flux becomes
    ``x -> A(a + tv x) / tv``."""
    tv = raw.tv_raw
    if not tv > 0.0:
        raise ValueError("zero total variation: v0 is constant, nothing to approximate")
    init = SignedBVInitial(
        atoms=tuple((x, m / tv) for x, m in raw.atoms),
        pieces=tuple((a, b, d / tv) for a, b, d in raw.pieces),
        offset_a=0.0,
    )
    return init, flux.rescaled(raw.offset_a, tv)


def sample_positions(init: SignedBVInitial, n: int, rng: np.random.Generator,
                     stratified: bool = False) -> np.ndarray:
    """Draw ``n`` positions from ``|u0| / |u0|(R)`` by inverse CDF.

    With ``stratified=True`` the i-th uniform is drawn from ``[i/n, (i+1)/n)``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    if n == 0:
        return np.empty(0)
    comps = init._components
    w = np.array([c[3] for c in comps])
    cum = np.concatenate([[0.0], np.cumsum(w)]) / w.sum()
    if stratified:
        u = (np.arange(n) + rng.random(n)) / n
    else:
        u = rng.random(n)
    k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(comps) - 1)
    left = np.array([c[0] for c in comps])[k]
    right = np.array([c[1] for c in comps])[k]
    frac = np.clip((u - cum[k]) / (cum[k + 1] - cum[k]), 0.0, np.nextafter(1.0, 0.0))
    return left + frac * (right - left)


def gamma_at(init: SignedBVInitial, x):
    """Sign of ``u0`` at support points ``x`` (scalar or array of +-1)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xs.shape, dtype=np.int8)
    done = np.zeros(xs.shape, dtype=bool)
    if init.atoms:
        loc = np.array([a[0] for a in init.atoms])
        sgn = np.sign([a[1] for a in init.atoms]).astype(np.int8)
        j = np.clip(np.searchsorted(loc, xs), 0, len(loc) - 1)
        hit = loc[j] == xs
        out[hit] = sgn[j[hit]]
        done |= hit
    for a, b, d in init.pieces:
        hit = ~done & (xs >= a) & (xs <= b)
        out[hit] = 1 if d > 0 else -1
        done |= hit
    if not done.all():
        bad = xs[~done][0]
        raise ValueError(f"{bad!r} is outside the support of the initial measure")
    return int(out[0]) if np.ndim(x) == 0 else out


def cdf_v0(init: SignedBVInitial, x):
    """``v0(x) = offset_a + u0((-inf, x])`` (right-continuous)."""
    xs = np.asarray(x, dtype=float)
    val = np.full(xs.shape, init.offset_a)
    for loc, m in init.atoms:
        val = val + np.where(xs >= loc, m, 0.0)
    for a, b, d in init.pieces:
        val = val + d * np.clip(xs - a, 0.0, b - a)
    return float(val) if np.ndim(x) == 0 else val


def riemann_datum(scale: float = 1.0) -> SignedBVInitial:
    """``scale * (delta_-3 - delta_-2 - delta_2 + delta_3)``, so that
    ``v0 = scale * (1_[-3,-2) - 1_[2,3))`` (two bumps of opposite sign)."""
    s = float(scale)
    return SignedBVInitial(atoms=((-3.0, s), (-2.0, -s), (2.0, -s), (3.0, s)))


def unit_riemann_datum() -> SignedBVInitial:
    """The same two-bump datum scaled to unit total variation."""
    return riemann_datum(0.25)


def initial_profile(init: SignedBVInitial) -> PiecewiseLinear:
    """``v0`` as an exact :class:`PiecewiseLinear` (jumps at atoms, ramps on pieces)."""
    knots = sorted({x for x, _ in init.atoms}
                   | {a for a, _, _ in init.pieces} | {b for _, b, _ in init.pieces})
    xs = np.array(knots, dtype=float)
    right = np.asarray(cdf_v0(init, xs), dtype=float)
    left = right.copy()
    for j, (x, m) in enumerate(init.atoms):
        left[np.searchsorted(xs, x)] -= m
    return PiecewiseLinear(xs, left, right)


def two_bump_scale(init: SignedBVInitial) -> float | None:
    """``s`` if ``init`` is ``riemann_datum(s)`` with ``s > 0``, else ``None``."""
    if init.pieces or init.offset_a != 0.0 or len(init.atoms) != 4:
        return None
    s = init.atoms[0][1]
    if s > 0 and init == riemann_datum(s):
        return float(s)
    return None
