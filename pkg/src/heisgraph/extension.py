"""Extension of tame and intrinsic Lipschitz maps from finite sets.

Middle dimension (k = n): build the first-order jet (f, psi) =
(phi_{2n+1}, (phi_{n+1}, ..., phi_{2n})) on E, extend f by the C^{1,1}
construction, and read the other components off as the gradient, so the
gradient identity holds by definition.  The jet is compatible with
lambda = max(|(L_{n+1}, ..., L_{2n})|, L_{2n+1}), and the output constants
are recorded as

    L'_i = C_IMPL[n] * lambda  (i = n+1..2n),   L'_{2n+1} = 2 C_IMPL[n] * lambda.

Low dimension (k < n): the graph of the middle components (phi_{k+1}, ...,
phi_n) embeds E into R^n; the remaining data transported onto the graph is
again tame (with the quadratic constant enlarged by sum L_{n+i} min(1, L_i)),
so the middle-dimension path applies.  Pulling back along McShane extensions
of the middle components and subtracting the bilinear correction in the last
slot yields the extension.  Formula constants carry an extra factor
sqrt(1 + sum L_j^2) per composition order, wrapped into CN_IMPL[n].

The intrinsic pipeline converts an intrinsic sample to its tame counterpart
(sign flip of the last component), extends, and converts back; the intrinsic
constant of the result is max(|(L'_{k+1}, ..., L'_{2n})|, sqrt(L'_{2n+1})).
Audits sample the extension on a grid spanning an inflated hull of E and
re-estimate all constants there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .heisenberg import SampledMap, SubgroupSplit, intrinsic_lip_constant
from .tame import TameConstants, check_tame, estimate_tame_constants, ilg_to_tame
from .tolerances import scaled
from .whitney import C_IMPL, JetData, WhitneyExtension, build_extension, mcshane_extend

# k < n composition constant per target dimension: the two composition steps
# contribute 2 C(n) and a Cauchy-Schwarz factor 1 + sqrt(n - 1)
CN_IMPL = {n: (2.0 + np.sqrt(n - 1.0)) * C_IMPL[n] for n in C_IMPL}

# intrinsic pipeline constant for k = n = 1: L' <= PIPELINE_C1 * max(L, L^2)
PIPELINE_C1 = 2.0 * C_IMPL[1]

RESTRICTION_TOL = 1e-10


@dataclass(frozen=True)
class AuditGrid:
    """Uniform grid over the inflated hull of the sample, used for audits."""

    per_axis: int | None = None
    inflate: float = 2.0

    def resolve_per_axis(self, k: int) -> int:
        if self.per_axis is not None:
            return self.per_axis
        if k == 1:
            return 200
        return max(3, int(round(200.0 ** (1.0 / k))))

    def build(self, domain: np.ndarray) -> np.ndarray:
        domain = np.atleast_2d(domain)
        k = domain.shape[1]
        count = self.resolve_per_axis(k)
        lo, hi = domain.min(axis=0), domain.max(axis=0)
        center = 0.5 * (lo + hi)
        half = np.maximum(0.5 * (hi - lo), 0.25) * self.inflate
        axes = [np.linspace(center[a] - half[a], center[a] + half[a], count) for a in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class ExtendedTameMap:
    """Evaluable tame extension with its constants provenance."""

    split: SubgroupSplit
    source: SampledMap
    formula_constants: TameConstants
    provenance: dict
    _whitney: WhitneyExtension = field(repr=False)
    _mcshane: tuple = field(default=(), repr=False)   # extensions of phi_{k+1..n}

    def evaluate(self, points) -> np.ndarray:
        """Values of all components phi_{k+1}, ..., phi_{2n+1} on points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n, k = self.split.n, self.split.k
        out = np.empty((points.shape[0], self.split.w_dim))
        if k == n:
            vals, grads = self._whitney.evaluate_many(points)
            out[:, :n] = grads
            out[:, n] = vals
            return out
        middle = np.stack([ext(points) for ext in self._mcshane], axis=1)
        lifted = np.concatenate([points, middle], axis=1)
        vals, grads = self._whitney.evaluate_many(lifted)
        out[:, : n - k] = middle
        out[:, n - k : 2 * n - k] = grads
        correction = 0.5 * np.einsum("pj,pj->p", middle, grads[:, k:n])
        out[:, -1] = vals - correction
        return out

    def component(self, index: int):
        """Scalar evaluator for phi_index."""
        col = self.split.column(index)

        def component_fn(points):
            return self.evaluate(points)[:, col]

        return component_fn

    def restriction_error(self) -> float:
        got = self.evaluate(self.source.domain)
        return float(np.max(np.abs(got - self.source.values)))


@dataclass(frozen=True)
class EmbeddedGraphMap:
    """A k < n sample transported onto the graph of its middle components."""

    base: SampledMap
    graph_points: np.ndarray
    f_values: np.ndarray
    constants: TameConstants

    def as_sampled_map(self) -> SampledMap:
        n = self.base.split.n
        return SampledMap(SubgroupSplit(n, n), self.graph_points, self.f_values)


def _require_tame(sampled: SampledMap, constants: TameConstants):
    if len(sampled) >= 2:
        report = check_tame(sampled, constants)
        if not report.passed:
            raise ValueError(f"tameness check failed: {report.witness()}")


def extend_tame_kn(sampled: SampledMap, constants: TameConstants) -> ExtendedTameMap:
    """Extend a middle-dimension tame map through the C^{1,1} machinery."""
    split = sampled.split
    if split.k != split.n:
        raise ValueError("extend_tame_kn needs k = n")
    _require_tame(sampled, constants)
    n = split.n
    lam = max(float(np.linalg.norm(constants.per_component)), constants.quadratic)
    jet = JetData(sampled.domain, sampled.values[:, -1], sampled.values[:, :n])
    ext = build_extension(jet, measure_pairs=24)
    per = np.full(n, C_IMPL[n] * lam)
    formula = TameConstants(per, 2.0 * C_IMPL[n] * lam)
    provenance = {
        "input_constants": constants.as_array().tolist(),
        "formula_constants": formula.as_array().tolist(),
        "jet_lambda": ext.lambda_,
        "lambda_bound": lam,
        "grad_lip_measured": ext.grad_lip_measured,
    }
    return ExtendedTameMap(split, sampled, formula, provenance, ext)


def embed_k_lt_n(sampled: SampledMap) -> EmbeddedGraphMap:
    """Transport a k < n sample onto the graph of its middle components."""
    split = sampled.split
    n, k = split.n, split.k
    if k >= n:
        raise ValueError("embedding needs k < n")
    mid = slice(split.column(k + 1), split.column(n) + 1)
    top = slice(split.column(n + 1), split.column(2 * n) + 1)
    upper = slice(split.column(n + k + 1), split.column(2 * n) + 1)
    middle = sampled.values[:, mid]
    graph_points = np.concatenate([sampled.domain, middle], axis=1)
    f_vals = np.empty((len(sampled), n + 1))
    f_vals[:, :n] = sampled.values[:, top]
    f_vals[:, n] = sampled.values[:, -1] + 0.5 * np.einsum(
        "pj,pj->p", middle, sampled.values[:, upper]
    )
    base_constants = estimate_tame_constants(sampled) if len(sampled) >= 2 else TameConstants(
        np.zeros(split.w_dim - 1), 0.0
    )
    l_mid = base_constants.per_component[mid]
    l_top = base_constants.per_component[top]
    l_upper = base_constants.per_component[upper]
    quad = base_constants.quadratic + float(np.sum(l_upper * np.minimum(1.0, l_mid)))
    constants = TameConstants(l_top, quad)
    return EmbeddedGraphMap(sampled, graph_points, f_vals, constants)


def extend_tame_kltn(sampled: SampledMap, constants: TameConstants) -> ExtendedTameMap:
    """Extend a low-dimension tame map via the graph embedding."""
    split = sampled.split
    n, k = split.n, split.k
    if k >= n:
        raise ValueError("extend_tame_kltn needs k < n")
    _require_tame(sampled, constants)
    mid = slice(split.column(k + 1), split.column(n) + 1)
    top = slice(split.column(n + 1), split.column(2 * n) + 1)
    upper = slice(split.column(n + k + 1), split.column(2 * n) + 1)
    l_mid = constants.per_component[mid]
    l_top = constants.per_component[top]
    l_upper = constants.per_component[upper]

    embedded = embed_k_lt_n(sampled)
    quad_embedded = constants.quadratic + float(np.sum(l_upper * np.minimum(1.0, l_mid)))
    jet = JetData(embedded.graph_points, embedded.f_values[:, n], embedded.f_values[:, :n])
    whitney = build_extension(jet, measure_pairs=24)

    mcshanes = tuple(
        mcshane_extend(sampled.domain, sampled.values[:, split.column(i)], float(l_mid[i - k - 1]))
        for i in range(k + 1, n + 1)
    )

    big_m = max(float(np.linalg.norm(l_top)), quad_embedded)
    s_factor = 1.0 + float(np.sum(l_mid**2))
    per = np.empty(split.w_dim - 1)
    per[mid] = l_mid
    per[top] = CN_IMPL[n] * np.sqrt(s_factor) * big_m
    formula = TameConstants(per, CN_IMPL[n] * s_factor * big_m)
    provenance = {
        "input_constants": constants.as_array().tolist(),
        "formula_constants": formula.as_array().tolist(),
        "embedded_quadratic": quad_embedded,
        "jet_lambda": whitney.lambda_,
        "lambda_bound": big_m,
        "grad_lip_measured": whitney.grad_lip_measured,
    }
    return ExtendedTameMap(split, sampled, formula, provenance, whitney, mcshanes)


@dataclass(frozen=True)
class IntrinsicExtension:
    """Intrinsic view of an extended tame map (last component sign-flipped)."""

    tame: ExtendedTameMap
    lipschitz_bound: float

    @property
    def split(self) -> SubgroupSplit:
        return self.tame.split

    def evaluate(self, points) -> np.ndarray:
        vals = self.tame.evaluate(points)
        vals[:, -1] = -vals[:, -1]
        return vals


def extend_ilg(sampled: SampledMap, audit: AuditGrid | None = None):
    """Full intrinsic Lipschitz extension pipeline with an audit report.

    Returns (intrinsic extension, L', report).  The report records the input
    constant, the formula constants with the frozen implementation factors,
    and the constants measured on the audit grid.
    """
    if len(sampled) == 0:
        raise ValueError("empty sampled map")
    audit = audit or AuditGrid()
    split = sampled.split
    tame_map, tame_constants = ilg_to_tame(sampled)
    lip_in = intrinsic_lip_constant(sampled) if len(sampled) >= 2 else 0.0
    if split.k == split.n:
        ext = extend_tame_kn(tame_map, tame_constants)
    else:
        ext = extend_tame_kltn(tame_map, tame_constants)
    formula = ext.formula_constants
    lip_out = max(float(np.linalg.norm(formula.per_component)), float(np.sqrt(formula.quadratic)))

    grid = audit.build(sampled.domain)
    tame_grid_values = ext.evaluate(grid)
    intrinsic_values = tame_grid_values.copy()
    intrinsic_values[:, -1] = -intrinsic_values[:, -1]
    audit_map = SampledMap(split, grid, intrinsic_values)
    measured_lip = intrinsic_lip_constant(audit_map)
    measured_tame = estimate_tame_constants(SampledMap(split, grid, tame_grid_values))

    restriction = float(
        np.max(np.abs(ext.evaluate(sampled.domain) - tame_map.values))
    )
    violated = []
    if restriction > scaled(RESTRICTION_TOL):
        worst = np.argmax(np.abs(ext.evaluate(sampled.domain) - tame_map.values).max(axis=1))
        violated.append(
            {"invariant": "restriction identity", "witness_index": int(worst)}
        )
    if measured_lip > lip_out * (1.0 + scaled(1e-9)):
        violated.append(
            {"invariant": "audited intrinsic constant <= formula constant"}
        )
    report = {
        "input_constants": tame_constants.as_array().tolist(),
        "formula_constants": formula.as_array().tolist(),
        "measured_constants": measured_tame.as_array().tolist(),
        "restriction_max_error": restriction,
        "input_lipschitz": lip_in,
        "formula_lipschitz": lip_out,
        "measured_lipschitz": measured_lip,
        "audit_points": int(grid.shape[0]),
        "violated": violated,
        "passed": not violated,
    }
    return IntrinsicExtension(ext, lip_out), lip_out, report
