"""Seeded synthetic inputs: intrinsic graphs over an interval and
middle-dimension tame samples.

All randomness comes from the splitmix64 stream (see prng), so a seed fully
determines the output bytes.  The one-dimensional generator draws piecewise
linear horizontal components with slopes bounded by the requested constant on
a uniform cell partition, then integrates the derivative identity

    d/dv phi_{2n+1} = phi_{n+1} + 0.5 * sum_{i=2..n} (phi_i' phi_{n+i} - phi_i phi_{n+i}')

for the last component (trapezoid on breakpoint-aligned cells, exact for the
piecewise-linear integrand).  The grid it returns stores the map in the tame
sign convention; flip the last component (tame_to_ilg) for the intrinsic
counterpart, or use ``intrinsic_curve`` for an exactly evaluable curve.
"""
from __future__ import annotations

import numpy as np

from .heisenberg import SampledMap, SubgroupSplit
from .piecewise import IntrinsicCurve, PiecewiseLinear
from .prng import SplitMix64
from .tame import GridFunction


def random_piecewise_horizontal(
    seed: int,
    n: int,
    lipschitz: float,
    breakpoint_count: int,
    domain: tuple[float, float],
) -> PiecewiseLinear:
    """Piecewise-linear (phi_2, ..., phi_{2n}) with per-cell slopes in
    [-lipschitz, lipschitz], on a uniform cell partition of the domain."""
    if breakpoint_count < 1:
        raise ValueError("need at least one cell")
    if lipschitz < 0:
        raise ValueError("lipschitz must be nonnegative")
    lo, hi = float(domain[0]), float(domain[1])
    if hi <= lo:
        raise ValueError("empty domain interval")
    m = 2 * n - 1
    rng = SplitMix64(seed)
    starts = np.array([rng.uniform(-1.0, 1.0) for _ in range(m)])
    slopes = np.array(
        [[rng.uniform(-lipschitz, lipschitz) for _ in range(m)] for _ in range(breakpoint_count)]
    )
    breaks = np.linspace(lo, hi, breakpoint_count + 1)
    values = np.empty((breakpoint_count + 1, m))
    values[0] = starts
    values[1:] = starts[None, :] + np.cumsum(slopes * np.diff(breaks)[:, None], axis=0)
    return PiecewiseLinear(breaks, values)


def intrinsic_curve(
    seed: int,
    n: int,
    lipschitz: float,
    breakpoint_count: int = 8,
    domain: tuple[float, float] = (0.0, 1.0),
) -> IntrinsicCurve:
    """Exactly evaluable intrinsic graph over the domain interval."""
    horizontal = random_piecewise_horizontal(seed, n, lipschitz, breakpoint_count, domain)
    return IntrinsicCurve(horizontal)


def generate_ilg_k1(
    seed: int,
    n: int,
    lipschitz: float,
    breakpoint_count: int = 8,
    domain: tuple[float, float] = (0.0, 1.0),
    nodes_per_cell: int = 16,
) -> GridFunction:
    """Uniform-grid sample of a random intrinsic graph, tame convention.

    The grid refines the breakpoint cells, so linear interpolation of the
    horizontal columns is exact and the last column carries no quadrature
    error beyond rounding.
    """
    if nodes_per_cell < 1:
        raise ValueError("need at least one node per cell")
    curve = intrinsic_curve(seed, n, lipschitz, breakpoint_count, domain)
    lo, hi = float(domain[0]), float(domain[1])
    count = breakpoint_count * nodes_per_cell
    spacing = (hi - lo) / count
    xs = lo + spacing * np.arange(count + 1)
    split = SubgroupSplit(n, 1)
    values = np.empty((xs.size, split.w_dim))
    values[:, : 2 * n - 1] = curve.horizontal(xs)
    values[:, -1] = -curve.last(xs)
    return GridFunction(split, [lo], spacing, values)


def generate_tame_kn(
    seed: int,
    n: int,
    box: tuple[float, float] = (-1.0, 1.0),
    count: int = 6,
) -> SampledMap:
    """Middle-dimension tame sample from a random quadratic potential.

    phi_{2n+1} is the potential and (phi_{n+1}, ..., phi_{2n}) its gradient,
    so the sample passes the tameness check with its own estimated constants.
    """
    if count < 1:
        raise ValueError("need at least one sample point")
    rng = SplitMix64(seed)
    quad = np.array([[rng.uniform(-0.5, 0.5) for _ in range(n)] for _ in range(n)])
    quad = 0.5 * (quad + quad.T)
    lin = np.array([rng.uniform(-0.5, 0.5) for _ in range(n)])
    lo, hi = float(box[0]), float(box[1])
    pts = np.array([[rng.uniform(lo, hi) for _ in range(n)] for _ in range(count)])
    split = SubgroupSplit(n, n)
    values = np.empty((count, n + 1))
    values[:, :n] = pts @ quad + lin[None, :]
    values[:, n] = 0.5 * np.einsum("pi,ij,pj->p", pts, quad, pts) + pts @ lin
    return SampledMap(split, pts, values)
