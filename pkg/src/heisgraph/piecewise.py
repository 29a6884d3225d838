"""Piecewise-linear curves and the exact last-component integral.

The corona machinery works with one-dimensional maps whose horizontal
components are piecewise linear.  Between breakpoints every integrand that
appears (products of components and their derivatives) is a polynomial of
degree <= 1, so cumulative integrals evaluated on breakpoint-aligned cells
are exact up to rounding; no quadrature error enters the stated tolerances.

``PiecewiseLinear`` is a vector-valued interpolant with constant continuation
outside its breakpoint range (derivative zero there).  ``IntrinsicCurve``
couples a piecewise-linear horizontal part (phi_2, ..., phi_{2n}) with the
last component obtained by integrating

    d/ds phi_{2n+1} = -phi_{n+1} + 0.5 * sum_{i=2..n} (phi_i phi_{n+i}' - phi_i' phi_{n+i}),

which is the derivative identity satisfied by one-dimensional intrinsic
graphs (the sign-flipped tame identity).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear map R -> R^m with constant continuation."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if breaks.size != values.shape[0] or breaks.size < 1:
            raise ValueError("breaks and values must share a positive length")
        if breaks.size >= 2 and np.any(np.diff(breaks) <= 0):
            raise ValueError("breaks must be strictly increasing")
        breaks.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        single = s.ndim == 0
        flat = np.atleast_1d(s)
        out = np.empty((flat.size, self.dim))
        for c in range(self.dim):
            out[:, c] = np.interp(flat, self.breaks, self.values[:, c])
        return out[0] if single else out

    def slopes(self) -> np.ndarray:
        """Cell slopes, shape (len(breaks) - 1, dim)."""
        if self.breaks.size == 1:
            return np.zeros((0, self.dim))
        return np.diff(self.values, axis=0) / np.diff(self.breaks)[:, None]

    def derivative(self, s) -> np.ndarray:
        """Cell slope at s (right-continuous); zero outside the break range."""
        s = np.asarray(s, dtype=float)
        single = s.ndim == 0
        flat = np.atleast_1d(s)
        out = np.zeros((flat.size, self.dim))
        if self.breaks.size >= 2:
            cells = np.searchsorted(self.breaks, flat, side="right") - 1
            inside = (cells >= 0) & (cells < self.breaks.size - 1)
            out[inside] = self.slopes()[cells[inside]]
        return out[0] if single else out

    def lipschitz_constant(self) -> float:
        if self.breaks.size < 2:
            return 0.0
        return float(np.max(np.linalg.norm(self.slopes(), axis=1)))


def merge_breaks(*arrays, lo=None, hi=None) -> np.ndarray:
    """Sorted unique union of breakpoint arrays, optionally clipped to [lo, hi]."""
    merged = np.unique(np.concatenate([np.asarray(a, dtype=float).reshape(-1) for a in arrays]))
    if lo is not None:
        merged = merged[merged >= lo - 1e-15]
        if merged.size == 0 or merged[0] > lo:
            merged = np.insert(merged, 0, lo)
    if hi is not None:
        merged = merged[merged <= hi + 1e-15]
        if merged.size == 0 or merged[-1] < hi:
            merged = np.append(merged, hi)
    return merged


@dataclass(frozen=True)
class IntrinsicCurve:
    """One-dimensional intrinsic graph data with exact last component.

    horizontal holds (phi_2, ..., phi_{2n}); the last component is anchored at
    the first breakpoint and integrated cell by cell (trapezoid, exact for the
    piecewise-linear integrand).
    """

    horizontal: PiecewiseLinear
    anchor_value: float = 0.0
    _cumulative: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.horizontal.dim % 2 != 1:
            raise ValueError("horizontal part must have 2n - 1 components")
        cum = self._integrate_last()
        cum.setflags(write=False)
        object.__setattr__(self, "_cumulative", cum)

    @property
    def n(self) -> int:
        return (self.horizontal.dim + 1) // 2

    def _ode_rhs(self, s, cell_slopes) -> np.ndarray:
        """-phi_{n+1} + 0.5 sum (phi_i phi_{n+i}' - phi_i' phi_{n+i}) at s."""
        n = self.n
        vals = self.horizontal(np.atleast_1d(s))
        out = -vals[:, n - 1]
        for i in range(2, n + 1):
            ci, cni = i - 2, n + i - 2
            out = out + 0.5 * (
                vals[:, ci] * cell_slopes[:, cni] - cell_slopes[:, ci] * vals[:, cni]
            )
        return out

    def _integrate_last(self) -> np.ndarray:
        breaks = self.horizontal.breaks
        cum = np.empty(breaks.size)
        cum[0] = self.anchor_value
        if breaks.size >= 2:
            slopes = self.horizontal.slopes()
            left = self._ode_rhs(breaks[:-1], slopes)
            right = self._ode_rhs(breaks[1:], slopes)
            steps = 0.5 * (left + right) * np.diff(breaks)
            cum[1:] = self.anchor_value + np.cumsum(steps)
        return cum

    def last(self, s) -> np.ndarray:
        """phi_{2n+1}(s), exact on and between breakpoints."""
        s = np.asarray(s, dtype=float)
        single = s.ndim == 0
        flat = np.atleast_1d(s)
        breaks = self.horizontal.breaks
        out = np.empty(flat.size)
        cells = np.clip(np.searchsorted(breaks, flat, side="right") - 1, 0, None)
        slopes = self.horizontal.slopes()
        zero = np.zeros((1, self.horizontal.dim))
        for i, (s_val, cell) in enumerate(zip(flat, cells)):
            if cell >= breaks.size - 1:
                cell_idx = breaks.size - 1
                base, cum0 = breaks[-1], self._cumulative[-1]
                slope_row = zero
            else:
                base, cum0 = breaks[cell], self._cumulative[cell]
                slope_row = slopes[cell : cell + 1]
            if s_val < breaks[0]:
                base, cum0, slope_row = breaks[0], self._cumulative[0], zero
            g0 = self._ode_rhs(np.array([base]), slope_row)[0]
            g1 = self._ode_rhs(np.array([s_val]), slope_row)[0]
            out[i] = cum0 + 0.5 * (g0 + g1) * (s_val - base)
        return out[0] if single else out

    def values(self, s) -> np.ndarray:
        """Full value vectors (phi_2, ..., phi_{2n+1}) at s."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.column_stack([self.horizontal(s), self.last(s)])

    def sample(self, s):
        """SampledMap view on the given domain points (k = 1 split)."""
        from .heisenberg import SampledMap, SubgroupSplit

        s = np.atleast_1d(np.asarray(s, dtype=float))
        return SampledMap(SubgroupSplit(self.n, 1), s[:, None], self.values(s))
