"""Piecewise-linear functions with jumps.

A :class:`PiecewiseLinear` is described by strictly increasing knots ``x``
and, at each knot, the left limit ``y_left`` and the value ``y_right``
(functions are right-continuous). Between consecutive knots the function is
affine from ``(x[k], y_right[k])`` to ``(x[k+1], y_left[k+1])``; outside the
knots it is constant. Step functions (particle CDFs) and grid interpolants
are both special cases, which lets error metrics and residual quadratures
treat them uniformly and exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PiecewiseLinear"]


@dataclass(frozen=True)
class PiecewiseLinear:
    x: np.ndarray
    y_left: np.ndarray
    y_right: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        yl = np.asarray(self.y_left, dtype=float)
        yr = np.asarray(self.y_right, dtype=float)
        if x.ndim != 1 or x.size == 0 or yl.shape != x.shape or yr.shape != x.shape:
            raise ValueError("knots and values must be nonempty 1-d arrays of equal length")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("knots must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(yl)) and np.all(np.isfinite(yr))):
            raise ValueError("piecewise-linear data must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y_left", yl)
        object.__setattr__(self, "y_right", yr)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, value: float, at: float = 0.0) -> "PiecewiseLinear":
        return cls(np.array([at]), np.array([value]), np.array([value]))

    @classmethod
    def from_points(cls, x, y) -> "PiecewiseLinear":
        """Continuous interpolant through ``(x, y)``."""
        y = np.asarray(y, dtype=float)
        return cls(x, y, y.copy())

    @classmethod
    def from_steps(cls, x, jumps, base: float = 0.0) -> "PiecewiseLinear":
        """Right-continuous step function ``base + sum_j jumps[j] 1_{x >= x[j]}``.

        ``x`` must be sorted; repeated locations are merged.
        """
        x = np.asarray(x, dtype=float)
        jumps = np.asarray(jumps, dtype=float)
        if x.size == 0:
            return cls.constant(base)
        ux, start = np.unique(x, return_index=True)
        merged = np.add.reduceat(jumps, start)
        right = base + np.cumsum(merged)
        left = np.concatenate([[base], right[:-1]])
        return cls(ux, left, right)

    # -- evaluation -----------------------------------------------------------

    @property
    def value_at_minus_inf(self) -> float:
        return float(self.y_left[0])

    @property
    def value_at_plus_inf(self) -> float:
        return float(self.y_right[-1])

    def _affine(self, p, k):
        x, yl, yr = self.x, self.y_left, self.y_right
        n = x.size
        out = np.empty(p.shape)
        below = k < 0
        above = k >= n - 1
        mid = ~(below | above)
        out[below] = yl[0]
        out[above] = yr[-1]
        km = k[mid]
        if km.size:
            x0, x1 = x[km], x[km + 1]
            s = (p[mid] - x0) / (x1 - x0)
            out[mid] = yr[km] + s * (yl[km + 1] - yr[km])
        return out

    def __call__(self, p):
        """Right-continuous value."""
        pa = np.asarray(p, dtype=float)
        flat = pa.ravel()
        out = self._affine(flat, np.searchsorted(self.x, flat, side="right") - 1)
        return out.reshape(pa.shape) if pa.ndim else float(out[0])

    def left_limit(self, p):
        pa = np.asarray(p, dtype=float)
        flat = pa.ravel()
        out = self._affine(flat, np.searchsorted(self.x, flat, side="left") - 1)
        return out.reshape(pa.shape) if pa.ndim else float(out[0])

    # -- algebra --------------------------------------------------------------

    def __neg__(self) -> "PiecewiseLinear":
        return PiecewiseLinear(self.x, -self.y_left, -self.y_right)

    def scaled(self, scale: float, offset: float = 0.0) -> "PiecewiseLinear":
        """``offset + scale * f``."""
        return PiecewiseLinear(self.x, offset + scale * self.y_left,
                               offset + scale * self.y_right)

    def reflected(self) -> "PiecewiseLinear":
        """``x -> f(-x)`` made right-continuous again."""
        return PiecewiseLinear(-self.x[::-1], self.y_right[::-1].copy(),
                               self.y_left[::-1].copy())

    def with_knots(self, extra) -> "PiecewiseLinear":
        """Same function with additional (redundant) knots inserted."""
        xs = np.union1d(self.x, np.asarray(extra, dtype=float))
        return PiecewiseLinear(xs, self.left_limit(xs), self(xs))

    def __add__(self, other) -> "PiecewiseLinear":
        if np.isscalar(other):
            return PiecewiseLinear(self.x, self.y_left + other, self.y_right + other)
        xs = np.union1d(self.x, other.x)
        return PiecewiseLinear(xs, self.left_limit(xs) + other.left_limit(xs),
                               self(xs) + other(xs))

    __radd__ = __add__

    def __sub__(self, other) -> "PiecewiseLinear":
        return self + (-other)

    def restricted_segments(self, lo: float, hi: float):
        """Segments covering ``[lo, hi]``: arrays ``(a, b, fa, fb)`` with the
        function affine from ``fa`` at ``a`` to ``fb`` at ``b`` on ``(a, b)``."""
        inner = self.x[(self.x > lo) & (self.x < hi)]
        pts = np.concatenate([[lo], inner, [hi]])
        a, b = pts[:-1], pts[1:]
        return a, b, self(a), self.left_limit(b)

    def antiderivative(self, p):
        """``int_{x[0]}^{p} f`` (negative for ``p < x[0]``)."""
        pa = np.asarray(p, dtype=float)
        flat = pa.ravel()
        x, yl, yr = self.x, self.y_left, self.y_right
        seg = 0.5 * (yr[:-1] + yl[1:]) * np.diff(x)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        k = np.clip(np.searchsorted(x, flat, side="right") - 1, 0, x.size - 1)
        vk = np.where(flat < x[0], yl[0], yr[k])
        out = cum[k] + 0.5 * (vk + self(flat)) * (flat - x[k])
        return out.reshape(pa.shape) if pa.ndim else float(out[0])

    def integral(self, lo: float, hi: float) -> float:
        return float(self.antiderivative(hi) - self.antiderivative(lo))

    def total_variation(self) -> float:
        jumps = np.abs(self.y_right - self.y_left).sum()
        ramps = np.abs(self.y_left[1:] - self.y_right[:-1]).sum()
        return float(jumps + ramps)
