"""Tame maps: the Euclidean-coordinate face of intrinsic Lipschitz graphs.

A map (phi_{k+1}, ..., phi_{2n+1}) on E in R^k is (L_{k+1}, ..., L_{2n+1})-tame
when each phi_i (i <= 2n) is L_i-Lipschitz and the last component satisfies a
two-sided quadratic Taylor-type bound driven by psi = (phi_{n+1}, ..., phi_{n+k});
for k < n the bound carries an extra bilinear term in the middle components.

The conversions here are exact sign flips of the last component:

- intrinsic L-Lipschitz  ->  tame with constants (L, ..., L, 2 L^2),
  improved to L_{n+1} = min(L, 2 L^2) when k = 1;
- tame (L_{k+1}, ..., L_{2n+1})  ->  intrinsic with
  L = max(|(L_{k+1}, ..., L_{2n})|, sqrt(L_{2n+1})).

Entire tame maps are characterized infinitesimally; the checks here use
central finite differences on uniform grids:

- k = 1:  d/dv phi_{2n+1} = phi_{n+1} + 0.5 * sum_{i=2..n} (phi_i' phi_{n+i} - phi_i phi_{n+i}')
- k = n:  grad phi_{2n+1} = (phi_{n+1}, ..., phi_{2n})

Minimal constants are pairwise suprema over the sample, the sampled-domain
analogue of the definitions.  All constant comparisons allow a multiplicative
1 + 1e-9 slack.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heisenberg import SampledMap, SubgroupSplit, intrinsic_lip_constant
from .tolerances import scaled

CHECK_SLACK = 1e-9


@dataclass(frozen=True)
class TameConstants:
    """Constants (L_{k+1}, ..., L_{2n}) plus the quadratic constant L_{2n+1}."""

    per_component: np.ndarray
    quadratic: float

    def __post_init__(self):
        arr = np.array(self.per_component, dtype=float)
        if arr.ndim != 1:
            raise ValueError("per_component must be a vector")
        if np.any(arr < 0) or self.quadratic < 0:
            raise ValueError("tame constants must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "per_component", arr)
        object.__setattr__(self, "quadratic", float(self.quadratic))

    def as_array(self) -> np.ndarray:
        return np.append(self.per_component, self.quadratic)


@dataclass(frozen=True)
class GridFunction:
    """Vector values sampled on a uniform grid over a box in R^k."""

    split: SubgroupSplit
    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        origin = np.atleast_1d(np.array(self.origin, dtype=float))
        values = np.array(self.values, dtype=float)
        k = self.split.k
        if origin.shape != (k,):
            raise ValueError(f"origin must lie in R^{k}")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if values.ndim != k + 1 or values.shape[-1] != self.split.w_dim:
            raise ValueError(
                f"values must have shape (grid shape..., {self.split.w_dim})"
            )
        origin.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple:
        return self.values.shape[:-1]

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.shape[axis])

    def to_sampled_map(self, stride: int = 1) -> SampledMap:
        """Flatten the grid (optionally strided) into a SampledMap."""
        axes = [self.axis_coords(a)[::stride] for a in range(self.split.k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        dom = np.stack([m.ravel() for m in mesh], axis=1)
        sub = self.values[tuple(slice(None, None, stride) for _ in axes)]
        vals = sub.reshape(-1, self.split.w_dim)
        return SampledMap(self.split, dom, vals)


@dataclass(frozen=True)
class TameCheckReport:
    passed: bool
    worst_kind: str            # "lipschitz" or "quadratic"
    worst_component: int | None
    worst_pair: tuple
    worst_ratio: float

    def witness(self) -> dict:
        return {
            "kind": self.worst_kind,
            "component": self.worst_component,
            "pair": list(self.worst_pair),
            "ratio": self.worst_ratio,
        }


def _psi_slice(split: SubgroupSplit):
    return slice(split.column(split.n + 1), split.column(split.n + split.k) + 1)


def _bilinear(split: SubgroupSplit, phix: np.ndarray, phiy: np.ndarray) -> float:
    """0.5 * sum_{i=k+1..n} (phi_i(y) phi_{n+i}(x) - phi_i(x) phi_{n+i}(y)); zero if k = n."""
    n, k = split.n, split.k
    if k == n:
        return 0.0
    mid = slice(split.column(k + 1), split.column(n) + 1)
    top = slice(split.column(n + k + 1), split.column(2 * n) + 1)
    return 0.5 * float(np.dot(phiy[mid], phix[top]) - np.dot(phix[mid], phiy[top]))


def tame_residuals(x, y, phix, phiy, split: SubgroupSplit) -> tuple[float, float]:
    """The two absolute values of the quadratic tameness condition.

    Forward uses psi at y, backward uses psi at x; their sum is compared
    against L_{2n+1} |x - y|^2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    phix = np.asarray(phix, dtype=float)
    phiy = np.asarray(phiy, dtype=float)
    if np.array_equal(x, y):
        raise ValueError("residuals need two distinct points")
    psi = _psi_slice(split)
    bil = _bilinear(split, phix, phiy)
    base = phiy[-1] - phix[-1] - bil
    r_fwd = abs(base - float(np.dot(phiy[psi], y - x)))
    r_bwd = abs(base - float(np.dot(phix[psi], y - x)))
    return r_fwd, r_bwd


def _pairwise_tables(sampled: SampledMap):
    """Distance matrix, per-component gap matrices, and quadratic-sum matrix."""
    split = sampled.split
    dom, vals = sampled.domain, sampled.values
    dv = dom[None, :, :] - dom[:, None, :]
    dist = np.linalg.norm(dv, axis=2)
    comp_gaps = np.abs(vals[None, :, :-1] - vals[:, None, :-1])
    psi = vals[:, _psi_slice(split)]
    base = vals[None, :, -1] - vals[:, None, -1]
    n, k = split.n, split.k
    if k < n:
        mid = slice(split.column(k + 1), split.column(n) + 1)
        top = slice(split.column(n + k + 1), split.column(2 * n) + 1)
        m, t = vals[:, mid], vals[:, top]
        base = base - 0.5 * (m[None, :, :] * t[:, None, :] - m[:, None, :] * t[None, :, :]).sum(axis=2)
    fwd = np.abs(base - np.einsum("bk,abk->ab", psi, dv))
    bwd = np.abs(base - np.einsum("ak,abk->ab", psi, dv))
    return dist, comp_gaps, fwd + bwd


def check_tame(sampled: SampledMap, constants: TameConstants, slack: float | None = None) -> TameCheckReport:
    """Verify all pairwise Lipschitz and quadratic bounds against the constants.

    Ratios are measured relative to each constant; pass means every ratio is
    at most 1 + slack.  The report carries the maximizing pair.
    """
    if len(sampled) < 2:
        raise ValueError("need at least 2 points to check tameness")
    if constants.per_component.shape != (sampled.split.w_dim - 1,):
        raise ValueError("constants do not match the split")
    if slack is None:
        slack = scaled(CHECK_SLACK)
    dist, comp_gaps, quad = _pairwise_tables(sampled)
    off = ~np.eye(len(sampled), dtype=bool)

    def normalized(measured, allowed):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(measured == 0.0, 0.0, measured / allowed)
        return ratio

    worst_ratio = -1.0
    worst_kind, worst_component, worst_pair = "lipschitz", None, (0, 0)
    for col in range(comp_gaps.shape[2]):
        ratio = normalized(comp_gaps[:, :, col], constants.per_component[col] * dist)
        ratio = np.where(off, ratio, -np.inf)
        idx = np.unravel_index(np.argmax(ratio), ratio.shape)
        if ratio[idx] > worst_ratio:
            worst_ratio = float(ratio[idx])
            worst_kind, worst_component, worst_pair = "lipschitz", col + sampled.split.k + 1, idx
    ratio = normalized(quad, constants.quadratic * dist**2)
    ratio = np.where(off, ratio, -np.inf)
    idx = np.unravel_index(np.argmax(ratio), ratio.shape)
    if ratio[idx] > worst_ratio:
        worst_ratio = float(ratio[idx])
        worst_kind, worst_component, worst_pair = "quadratic", None, idx
    passed = worst_ratio <= 1.0 + slack
    return TameCheckReport(passed, worst_kind, worst_component, tuple(int(i) for i in worst_pair), worst_ratio)


def estimate_tame_constants(sampled: SampledMap) -> TameConstants:
    """Componentwise minimal constants: pairwise suprema over the sample."""
    if len(sampled) < 2:
        raise ValueError("need at least 2 points to estimate constants")
    dist, comp_gaps, quad = _pairwise_tables(sampled)
    off = ~np.eye(len(sampled), dtype=bool)
    d = dist[off]
    per = np.array([np.max(comp_gaps[:, :, c][off] / d) for c in range(comp_gaps.shape[2])])
    quadratic = float(np.max(quad[off] / d**2))
    return TameConstants(per, quadratic)


def ilg_to_tame(sampled: SampledMap) -> tuple[SampledMap, TameConstants]:
    """Negate the last component and report the forced tame constants.

    With L the least intrinsic Lipschitz constant, the constants are
    (L, ..., L, 2 L^2); for k = 1 the psi-component improves to min(L, 2 L^2).
    """
    if len(sampled) == 0:
        raise ValueError("empty sampled map")
    vals = sampled.values.copy()
    vals[:, -1] = -vals[:, -1]
    tame_map = SampledMap(sampled.split, sampled.domain, vals)
    if len(sampled) >= 2:
        lip = intrinsic_lip_constant(sampled)
    else:
        lip = 0.0
    per = np.full(sampled.split.w_dim - 1, lip)
    quadratic = 2.0 * lip * lip
    if sampled.split.k == 1:
        per[sampled.split.column(sampled.split.n + 1)] = min(lip, quadratic)
    return tame_map, TameConstants(per, quadratic)


def tame_to_ilg(sampled: SampledMap, constants: TameConstants) -> tuple[SampledMap, float]:
    """Flip the last component back and return the intrinsic constant bound.

    Raises when the tameness check fails for the given constants.
    """
    report = check_tame(sampled, constants)
    if not report.passed:
        raise ValueError(f"tameness check failed: {report.witness()}")
    vals = sampled.values.copy()
    vals[:, -1] = -vals[:, -1]
    lip = max(float(np.linalg.norm(constants.per_component)), float(np.sqrt(constants.quadratic)))
    return SampledMap(sampled.split, sampled.domain, vals), lip


def check_ode_k1(grid: GridFunction) -> float:
    """Sup residual of the k = 1 derivative identity at interior grid nodes.

    Central differences; for grids sampled from maps that satisfy the identity
    this is O(h) in general and O(h^2) for smooth data.
    """
    split = grid.split
    if split.k != 1:
        raise ValueError("ODE check needs k = 1")
    vals = grid.values
    if vals.shape[0] < 3:
        raise ValueError("need at least 3 grid points")
    n = split.n
    h = grid.spacing
    d = (vals[2:] - vals[:-2]) / (2.0 * h)
    mid = vals[1:-1]
    lhs = d[:, -1]
    rhs = mid[:, split.column(n + 1)].copy()
    for i in range(2, n + 1):
        ci, cni = split.column(i), split.column(n + i)
        rhs += 0.5 * (d[:, ci] * mid[:, cni] - mid[:, ci] * d[:, cni])
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0


def check_gradient_kn(grid: GridFunction) -> float:
    """Sup-norm residual of grad phi_{2n+1} = (phi_{n+1}, ..., phi_{2n})."""
    split = grid.split
    if split.k != split.n:
        raise ValueError("gradient check needs k = n")
    vals = grid.values
    n = split.n
    if any(s < 3 for s in vals.shape[:-1]):
        raise ValueError("need at least 3 points per axis")
    h = grid.spacing
    interior = tuple(slice(1, -1) for _ in range(n))
    worst = 0.0
    last = vals[..., -1]
    for axis in range(n):
        lo = tuple(slice(2, None) if a == axis else slice(1, -1) for a in range(n))
        hi = tuple(slice(None, -2) if a == axis else slice(1, -1) for a in range(n))
        deriv = (last[lo] - last[hi]) / (2.0 * h)
        target = vals[interior + (split.column(n + 1 + axis),)]
        worst = max(worst, float(np.max(np.abs(deriv - target))))
    return worst


def self_improve_quadratic(sampled: SampledMap, constants: TameConstants) -> TameConstants:
    """Tighten the quadratic constant on a box domain (quasiconvexity C = 1).

    Replaces L_{2n+1} by min(L_{2n+1}, 2 |(L_{n+1}, ..., L_{2n})|); only valid
    in the middle dimension k = n where the gradient identity applies.
    """
    if sampled.split.k != sampled.split.n:
        raise ValueError("self-improvement needs k = n")
    bound = 2.0 * float(np.linalg.norm(constants.per_component))
    return TameConstants(constants.per_component, min(constants.quadratic, bound))
