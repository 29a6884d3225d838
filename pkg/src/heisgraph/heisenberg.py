"""Arithmetic in the Heisenberg group H^n and graph-map machinery.

H^n is R^(2n+1) with the product

    (x, t) * (x', t') = (x + x', t + t' + 0.5 * sum_i (x_i x'_{n+i} - x'_i x_{n+i})),

the homogeneous norm ||(x, t)|| = max(|x|, sqrt(|t|)), and the left-invariant
metric d(p, q) = ||q^{-1} * p||.  Coordinates are fixed so that the horizontal
subgroup V is the span of the first k coordinate axes and the complementary
vertical subgroup W carries the remaining 2n-k horizontal coordinates plus t.

A map phi from a finite set E in R^k into W is stored as a ``SampledMap``
whose value columns are the components phi_{k+1}, ..., phi_{2n+1}.  The module
provides the graph map Phi(v) = v * phi(v), the projections onto V and W, the
residual of the graph-difference projection used by the Lipschitz criterion,
and the least intrinsic Lipschitz constant of a sampled map.

All types are immutable values and all operations are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tolerances import scaled

DUPLICATE_TOL = 1e-12


def _frozen_array(values, shape_hint=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape_hint is not None and arr.shape != shape_hint:
        raise ValueError(f"expected shape {shape_hint}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HeisPoint:
    """A point (x_1, ..., x_{2n}, t) of H^n."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        arr = _frozen_array(self.x)
        if arr.ndim != 1 or arr.size == 0 or arr.size % 2 != 0:
            raise ValueError("x must have even positive length 2n")
        if not np.isfinite(self.t):
            raise ValueError("t must be finite")
        object.__setattr__(self, "x", arr)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.x.size // 2

    def coords(self) -> np.ndarray:
        return np.append(self.x, self.t)

    @staticmethod
    def from_coords(coords) -> "HeisPoint":
        coords = np.asarray(coords, dtype=float)
        return HeisPoint(coords[:-1], float(coords[-1]))


def identity(n: int) -> HeisPoint:
    return HeisPoint(np.zeros(2 * n), 0.0)


@dataclass(frozen=True)
class SubgroupSplit:
    """The fixed axis-aligned split V = span(e_1..e_k), W = V-perp x R."""

    n: int
    k: int

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise ValueError("n and k must be integers")
        if not (1 <= self.k <= self.n):
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def w_dim(self) -> int:
        """Number of value components phi_{k+1}, ..., phi_{2n+1}."""
        return 2 * self.n + 1 - self.k

    def column(self, component: int) -> int:
        """Value-array column holding phi_component."""
        if not (self.k + 1 <= component <= 2 * self.n + 1):
            raise ValueError(f"component {component} outside k+1..2n+1")
        return component - self.k - 1


@dataclass(frozen=True)
class SampledMap:
    """A map phi: E -> W sampled on finitely many points of R^k."""

    split: SubgroupSplit
    domain: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dom = np.array(self.domain, dtype=float)
        if dom.ndim == 1:
            dom = dom[:, None]
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if dom.shape[0] != vals.shape[0]:
            raise ValueError("domain and values must have the same length")
        if dom.shape[1] != self.split.k:
            raise ValueError(f"domain points must lie in R^{self.split.k}")
        if vals.shape[1] != self.split.w_dim:
            raise ValueError(f"value vectors must have length {self.split.w_dim}")
        if not (np.all(np.isfinite(dom)) and np.all(np.isfinite(vals))):
            raise ValueError("domain and values must be finite")
        if 2 <= dom.shape[0] <= 2048:
            gaps = np.abs(dom[:, None, :] - dom[None, :, :]).max(axis=2)
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() <= scaled(DUPLICATE_TOL):
                a, b = np.unravel_index(np.argmin(gaps), gaps.shape)
                raise ValueError(f"duplicate domain points at indices {a} and {b}")
        elif dom.shape[0] > 2048:
            # large point sets (audit grids): adjacent-after-lexsort check
            order = np.lexsort(dom.T[::-1])
            step = np.abs(np.diff(dom[order], axis=0)).max(axis=1)
            if step.size and step.min() <= scaled(DUPLICATE_TOL):
                i = int(np.argmin(step))
                a, b = int(order[i]), int(order[i + 1])
                raise ValueError(f"duplicate domain points at indices {a} and {b}")
        dom.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.domain.shape[0]


@dataclass(frozen=True)
class ResidualPair:
    """W-projection of a graph difference, split into its two norm parts."""

    horizontal_gap: np.ndarray
    h_value: float

    def __post_init__(self):
        object.__setattr__(self, "horizontal_gap", _frozen_array(self.horizontal_gap))
        object.__setattr__(self, "h_value", float(self.h_value))

    @property
    def vertical_homog(self) -> float:
        return float(np.sqrt(abs(self.h_value)))

    def w_norm(self) -> float:
        return max(float(np.linalg.norm(self.horizontal_gap)), self.vertical_homog)


def _twist(xa: np.ndarray, xb: np.ndarray, n: int) -> float:
    """Antisymmetric t-increment of the product; one fixed reduction order so
    that decomposition and recomposition cancel bitwise."""
    return 0.5 * (np.dot(xa[:n], xb[n:]) - np.dot(xb[:n], xa[n:]))


def product(p: HeisPoint, q: HeisPoint) -> HeisPoint:
    """Group product p * q."""
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: n={p.n} vs n={q.n}")
    return HeisPoint(p.x + q.x, p.t + q.t + _twist(p.x, q.x, p.n))


def inverse(p: HeisPoint) -> HeisPoint:
    """Group inverse; coordinate negation because the twist is antisymmetric."""
    return HeisPoint(-p.x, -p.t)


def heis_norm(p: HeisPoint) -> float:
    return max(float(np.linalg.norm(p.x)), float(np.sqrt(abs(p.t))))


def distance(p: HeisPoint, q: HeisPoint) -> float:
    """Left-invariant metric d(p, q) = ||q^{-1} * p||."""
    return heis_norm(product(inverse(q), p))


def dilation(r: float, p: HeisPoint) -> HeisPoint:
    """Anisotropic scaling (x, t) -> (r x, r^2 t); norm-homogeneous of degree 1."""
    if r <= 0.0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    return HeisPoint(r * p.x, r * r * p.t)


def project_v(p: HeisPoint, split: SubgroupSplit) -> HeisPoint:
    if p.n != split.n:
        raise ValueError("point and split disagree on n")
    x = np.zeros_like(p.x)
    x[: split.k] = p.x[: split.k]
    return HeisPoint(x, 0.0)


def project_w(p: HeisPoint, split: SubgroupSplit) -> HeisPoint:
    """W-part of the unique decomposition p = project_v(p) * project_w(p)."""
    if p.n != split.n:
        raise ValueError("point and split disagree on n")
    k = split.k
    xv = np.zeros_like(p.x)
    xv[:k] = p.x[:k]
    xw = p.x.copy()
    xw[:k] = 0.0
    return HeisPoint(xw, p.t - _twist(xv, xw, split.n))


def graph_map(v, value, split: SubgroupSplit) -> HeisPoint:
    """Graph point Phi(v) = v * phi(v) for a value vector (phi_{k+1..2n+1})."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    value = np.asarray(value, dtype=float)
    n, k = split.n, split.k
    if v.shape != (k,):
        raise ValueError(f"v must lie in R^{k}")
    if value.shape != (split.w_dim,):
        raise ValueError(f"value must have length {split.w_dim}")
    xv = np.zeros(2 * n)
    xv[:k] = v
    xw = np.zeros(2 * n)
    xw[k:] = value[: 2 * n - k]
    t = value[-1] + _twist(xv, xw, n)
    return HeisPoint(xv + xw, t)


def _h_value(v, v_val, w, w_val, split: SubgroupSplit) -> float:
    """The t-part H(v, w) of project_w(Phi(v)^{-1} * Phi(w))."""
    n, k = split.n, split.k
    psi_v = v_val[split.column(n + 1) : split.column(n + k) + 1]
    h = w_val[-1] - v_val[-1] + np.dot(psi_v, w - v)
    if k < n:
        lo = split.column(k + 1)
        hi = split.column(n) + 1
        mid_v, mid_w = v_val[lo:hi], w_val[lo:hi]
        lo2 = split.column(n + k + 1)
        hi2 = split.column(2 * n) + 1
        top_v, top_w = v_val[lo2:hi2], w_val[lo2:hi2]
        h += 0.5 * (np.dot(mid_w, top_v) - np.dot(mid_v, top_w))
    return float(h)


def ilg_residual(v, v_val, w, w_val, split: SubgroupSplit) -> ResidualPair:
    """Componentwise gaps and H(v, w) for a pair of graph samples.

    ``max(|horizontal_gap|, sqrt(|h_value|))`` equals the homogeneous norm of
    project_w(Phi(v)^{-1} * Phi(w)).
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    v_val = np.asarray(v_val, dtype=float)
    w_val = np.asarray(w_val, dtype=float)
    if v.shape != (split.k,) or w.shape != (split.k,):
        raise ValueError(f"points must lie in R^{split.k}")
    if v_val.shape != (split.w_dim,) or w_val.shape != (split.w_dim,):
        raise ValueError(f"values must have length {split.w_dim}")
    gap = w_val[:-1] - v_val[:-1]
    return ResidualPair(gap, _h_value(v, v_val, w, w_val, split))


def pairwise_w_norms(sampled: SampledMap) -> np.ndarray:
    """Matrix M[a, b] = ||project_w(Phi(v_a)^{-1} * Phi(v_b))|| over all pairs."""
    split = sampled.split
    n, k = split.n, split.k
    dom, vals = sampled.domain, sampled.values
    gaps = vals[None, :, :-1] - vals[:, None, :-1]
    horiz = np.linalg.norm(gaps, axis=2)
    dv = dom[None, :, :] - dom[:, None, :]
    psi = vals[:, split.column(n + 1) : split.column(n + k) + 1]
    h = vals[None, :, -1] - vals[:, None, -1] + np.einsum("ak,abk->ab", psi, dv)
    if k < n:
        lo, hi = split.column(k + 1), split.column(n) + 1
        lo2, hi2 = split.column(n + k + 1), split.column(2 * n) + 1
        mid, top = vals[:, lo:hi], vals[:, lo2:hi2]
        h += 0.5 * (mid[None, :, :] * top[:, None, :] - mid[:, None, :] * top[None, :, :]).sum(axis=2)
    return np.maximum(horiz, np.sqrt(np.abs(h)))


def intrinsic_lip_constant(sampled: SampledMap) -> float:
    """Least L for which the sampled map is intrinsic L-Lipschitz.

    Supremum over ordered pairs of the W-part norm divided by the domain gap.
    """
    if len(sampled) < 2:
        raise ValueError("need at least 2 domain points")
    norms = pairwise_w_norms(sampled)
    dv = np.linalg.norm(sampled.domain[None, :, :] - sampled.domain[:, None, :], axis=2)
    off = ~np.eye(len(sampled), dtype=bool)
    return float(np.max(norms[off] / dv[off]))
