"""Corona decompositions of one-dimensional intrinsic Lipschitz graphs.

The decomposition machinery has three layers.

1. Euclidean stage: a stopping-time pass over the truncated dyadic grid for a
   1-Lipschitz map psi: R -> R^(2n-1).  Every interval Q gets a least-squares
   affine fit over 17 uniform samples of 2Q (the doubled interval).  A
   candidate tree top whose own fit deviates by more than (thr/2)|Q| is bad;
   inside a tree, a child stops when its fit deviates or its fit slope drifts
   from the top slope by more than thr/2, where thr = delta / (8 sqrt(2n-1)).
   Stopping children become new candidate tops in sibling pairs, so trees are
   coherent and children enter in pairs.  Each tree carries the linear part
   L_T(s) = a_T s from its top fit (clamped to |a_T| <= 2, flagged if the
   clamp fires) and the piecewise-linear psi_T interpolating psi - L_T at the
   minimal-interval endpoints, clamped to its boundary values outside Q(T).

2. Endpoint matching: psi_T is corrected by an affine ramp per minimal
   interval S = [a, b] with slope c_{S, l} = (gap_l(b) - gap_l(a)) / (b - a),
   gap = psi - L_T - psi_T, which forces equality at every minimal endpoint.
   The interpolating construction above already has zero gaps, so the ramps
   vanish up to rounding there; the operation implements the general formula.

3. Intrinsic lift: per tree, the approximant keeps the matched horizontal
   components, adds a tent correction xi_S on the middle half of each minimal
   interval to the component phi_{n+1} (slope +-4c, integral c |S|^2 / 4),
   and integrates the derivative identity to produce the last component, so
   the lifted map agrees with phi at all minimal endpoints.  The constant c
   comes from an integral of the mismatch between the curve and the lift,
   evaluated by breakpoint-aligned composite Simpson (exact here, since all
   integrands are piecewise linear).

Verification samples the graph distance

    d(phi(s), phi_T(s)) = max(|horizontal gap|, sqrt(|vertical expression|))

over 17 points per doubled member interval and compares with eta |Q|.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .heisenberg import SampledMap, SubgroupSplit, intrinsic_lip_constant
from .piecewise import IntrinsicCurve, PiecewiseLinear, merge_breaks
from .tolerances import scaled

FIT_SAMPLES = 17
SIMPSON_PANELS = 64
LINEAR_CLAMP = 2.0
# frozen bound for the tilted-axis reparameterization: measured horizontal constant
# over V_L stays below REPARAM_C * sqrt(eta) (calibrated, kept with margin)
REPARAM_C = 4.0


# ---------------------------------------------------------------------------
# dyadic machinery


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """[m 2^-j, (m+1) 2^-j) encoded by integers, exact endpoint arithmetic."""

    j: int
    m: int

    @property
    def length(self) -> float:
        return math.ldexp(1.0, -self.j)

    @property
    def left(self) -> float:
        return math.ldexp(float(self.m), -self.j)

    @property
    def right(self) -> float:
        return math.ldexp(float(self.m + 1), -self.j)

    @property
    def midpoint(self) -> float:
        return math.ldexp(self.m + 0.5, -self.j)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return DyadicInterval(self.j + 1, 2 * self.m), DyadicInterval(self.j + 1, 2 * self.m + 1)

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j - 1, self.m >> 1)

    def double_bounds(self) -> tuple[float, float]:
        """2Q: same midpoint, twice the length."""
        half = 0.5 * self.length
        return self.left - half, self.right + half

    def half_bounds(self) -> tuple[float, float]:
        """Half interval: same center, half the length."""
        quarter = 0.25 * self.length
        return self.left + quarter, self.right - quarter

    def contains(self, other: "DyadicInterval") -> bool:
        return other.j >= self.j and (other.m >> (other.j - self.j)) == self.m

    def samples(self, count: int = FIT_SAMPLES) -> np.ndarray:
        lo, hi = self.double_bounds()
        return np.linspace(lo, hi, count)


def carleson_sum(collection, q0: DyadicInterval) -> float:
    """Sum of |Q| over intervals of the collection contained in q0."""
    return float(sum(q.length for q in collection if q0.contains(q)))


@dataclass(frozen=True)
class Tree:
    """Coherent collection of dyadic intervals with a unique top."""

    top: DyadicInterval
    members: frozenset

    def minimal_intervals(self) -> list:
        """Members with no children inside the tree, sorted by position."""
        leaves = [
            q
            for q in self.members
            if q.children()[0] not in self.members and q.children()[1] not in self.members
        ]
        return sorted(leaves, key=lambda q: (q.left, q.j))

    def boundary_points(self) -> np.ndarray:
        pts = set()
        for s in self.minimal_intervals():
            pts.add(s.left)
            pts.add(s.right)
        return np.array(sorted(pts))

    def check_coherence(self) -> bool:
        """(T1) unique top, (T2) coherent, (T3) children in pairs."""
        for q in self.members:
            if not self.top.contains(q):
                return False
            walk = q
            while walk != self.top:
                walk = walk.parent()
                if walk not in self.members:
                    return False
            c0, c1 = q.children()
            if (c0 in self.members) != (c1 in self.members):
                return False
        return True


@dataclass(frozen=True)
class Coronization:
    root: DyadicInterval
    depth: int
    bad: tuple
    trees: tuple
    packing_constant: float
    flags: tuple = field(default_factory=tuple)

    def grid(self) -> list:
        out = []
        level = [self.root]
        for _ in range(self.depth + 1):
            out.extend(level)
            level = [c for q in level for c in q.children()]
        return out

    def good(self) -> set:
        return set().union(*[t.members for t in self.trees]) if self.trees else set()


@dataclass(frozen=True)
class TreeFit:
    """Per-tree linear slope and the piecewise-linear remainder."""

    tree: Tree
    slope: np.ndarray           # a_T, L_T(s) = a_T s
    remainder: PiecewiseLinear  # psi_T, clamped outside Q(T)
    flags: tuple = field(default_factory=tuple)

    def approximant(self, s) -> np.ndarray:
        """(psi_T + L_T)(s)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self.remainder(s) + s[:, None] * self.slope[None, :]


def _affine_fits(psi_values: np.ndarray, samples: np.ndarray):
    """Least-squares affine fit per component; returns slopes, intercepts, dev."""
    coeff = np.polyfit(samples, psi_values, 1)
    slopes, intercepts = coeff[0], coeff[1]
    fitted = samples[:, None] * slopes[None, :] + intercepts[None, :]
    dev = float(np.max(np.linalg.norm(psi_values - fitted, axis=1)))
    return slopes, intercepts, dev


def euclidean_corona(psi, root: DyadicInterval, depth: int, delta: float):
    """Stopping-time coronization of a 1-Lipschitz map psi: R -> R^(2n-1).

    Returns (Coronization, list of TreeFit).  Postconditions verified by the
    test-suite: partition and coherence invariants, the sampled approximation
    bound delta |Q| on 2Q for every member interval, and a psi_T Lipschitz
    constant well below delta.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    probe = np.atleast_2d(psi(np.array([root.midpoint])))
    m = probe.shape[1]
    two_n_minus_1 = m
    thr = delta / (8.0 * np.sqrt(two_n_minus_1)) / 2.0

    fits: dict = {}

    def fit_of(q: DyadicInterval):
        if q not in fits:
            samples = q.samples()
            vals = np.atleast_2d(psi(samples))
            # guard: consecutive sample increments certify a Lipschitz
            # violation (impossible for 1-Lipschitz input)
            steps = np.linalg.norm(np.diff(vals, axis=0), axis=1)
            bad = bool(np.any(steps > np.diff(samples) * (1.0 + scaled(1e-9))))
            fits[q] = (*_affine_fits(vals, samples), bad)
        return fits[q]

    max_level = root.j + depth
    bad: list = []
    trees: list = []
    tree_fits: list = []
    flags: list = []
    tops = deque([root])
    while tops:
        top = tops.popleft()
        slope, intercept, dev, guard = fit_of(top)
        if guard or dev > thr * top.length:
            bad.append(top)
            if top.j < max_level:
                tops.extend(top.children())
            continue
        members = {top}
        queue = deque([top])
        while queue:
            q = queue.popleft()
            if q.j >= max_level:
                continue
            c0, c1 = q.children()
            stop = False
            for child in (c0, c1):
                cs, _, cdev, cguard = fit_of(child)
                if cguard or cdev > thr * child.length or np.linalg.norm(cs - slope) > thr:
                    stop = True
            if stop:
                tops.extend((c0, c1))
            else:
                members.update((c0, c1))
                queue.extend((c0, c1))
        tree = Tree(top, frozenset(members))
        a = slope.copy()
        norm_a = float(np.linalg.norm(a))
        tflags = ()
        if norm_a > LINEAR_CLAMP:
            a *= LINEAR_CLAMP / norm_a
            tflags = ("linear part clamped to norm 2",)
            flags.append(f"tree at ({top.j},{top.m}): linear part clamped")
        breaks = tree.boundary_points()
        vals = np.atleast_2d(psi(breaks)) - breaks[:, None] * a[None, :]
        remainder = PiecewiseLinear(breaks, vals)
        trees.append(tree)
        tree_fits.append(TreeFit(tree, a, remainder, tflags))

    coronization = Coronization(
        root=root,
        depth=depth,
        bad=tuple(sorted(bad)),
        trees=tuple(trees),
        packing_constant=0.0,
        flags=tuple(flags),
    )
    packing = measure_packing_constant(coronization)
    coronization = Coronization(
        root, depth, coronization.bad, coronization.trees, packing, coronization.flags
    )
    return coronization, tree_fits


def measure_packing_constant(coronization: Coronization) -> float:
    """Exhaustive Carleson packing ratio over the truncated grid."""
    bad = set(coronization.bad)
    tops = {t.top for t in coronization.trees}
    worst = 0.0

    def visit(q: DyadicInterval, level: int):
        nonlocal worst
        bad_sum = q.length if q in bad else 0.0
        top_sum = q.length if q in tops else 0.0
        if level < coronization.depth:
            for child in q.children():
                b, t = visit(child, level + 1)
                bad_sum += b
                top_sum += t
        worst = max(worst, bad_sum / q.length, top_sum / q.length)
        return bad_sum, top_sum

    visit(coronization.root, 0)
    return worst


def verify_tree_fit(psi, fit: TreeFit, delta: float, slack: float = 1e-6) -> dict:
    """Sampled approximation check |psi - (psi_T + L_T)| <= delta |Q| on 2Q."""
    worst_ratio = 0.0
    worst = None
    for q in fit.tree.members:
        samples = q.samples()
        gap = np.linalg.norm(np.atleast_2d(psi(samples)) - fit.approximant(samples), axis=1)
        ratio = float(np.max(gap)) / (delta * q.length)
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst = (q, float(samples[int(np.argmax(gap))]))
    return {
        "worst_ratio": worst_ratio,
        "worst_interval": worst[0] if worst else None,
        "worst_sample": worst[1] if worst else None,
        "passed": worst_ratio <= 1.0 + scaled(slack),
    }


def boundary_match(tree: Tree, fit: TreeFit, psi, delta: float):
    """Affine corrections per minimal interval forcing endpoint equality.

    Returns (matched TreeFit, list of (S, c vector)).  The correction slopes
    obey |(c_{S,2}, ..., c_{S,2n})| <= delta / 4 whenever the input fit meets
    the tightened approximation bound.
    """
    minimal = tree.minimal_intervals()
    breaks = fit.remainder.breaks
    vals = fit.remainder.values.copy()
    corrections = []
    for s_iv in minimal:
        a, b = s_iv.left, s_iv.right
        gap_a = np.atleast_2d(psi(np.array([a])))[0] - fit.slope * a - fit.remainder(a)
        gap_b = np.atleast_2d(psi(np.array([b])))[0] - fit.slope * b - fit.remainder(b)
        c = (gap_b - gap_a) / (b - a)
        corrections.append((s_iv, c))
        inside = (breaks >= a - 1e-15) & (breaks <= b + 1e-15)
        ramp = gap_a[None, :] + (breaks[inside, None] - a) * c[None, :]
        # shared endpoints receive the same value from both sides; assigning
        # the endpoint ramp value keeps the construction single-valued
        vals[inside] = fit.remainder.values[inside] + ramp
    matched = TreeFit(tree, fit.slope, PiecewiseLinear(breaks, vals), fit.flags)
    cap = delta / 4.0
    bad = [float(np.linalg.norm(c)) for _, c in corrections if np.linalg.norm(c) > cap * (1 + scaled(1e-9))]
    if bad:
        raise ValueError(
            f"correction slopes {bad} exceed delta/4 = {cap}; the input fit "
            "does not meet the tightened approximation bound"
        )
    return matched, corrections


# ---------------------------------------------------------------------------
# intrinsic lift


def _simpson(fn, lo: float, hi: float, inner_breaks: np.ndarray) -> float:
    """Composite Simpson on panels refined by the integrand's breakpoints.

    Exact for integrands that are polynomials of degree <= 2 between
    breakpoints; fn(points, mids) must evaluate with cell data taken at mids.
    """
    if hi <= lo:
        return 0.0
    nodes = merge_breaks(np.linspace(lo, hi, SIMPSON_PANELS + 1), inner_breaks, lo=lo, hi=hi)
    a, b = nodes[:-1], nodes[1:]
    mid = 0.5 * (a + b)
    fa = fn(a, mid)
    fm = fn(mid, mid)
    fb = fn(b, mid)
    return float(np.sum((b - a) / 6.0 * (fa + 4.0 * fm + fb)))


@dataclass(frozen=True)
class TreeApprox:
    """Per-tree intrinsic approximant: matched horizontal part, tent
    corrections on component n+1, and the integrated last component."""

    tree: Tree
    fit: TreeFit                 # matched fit (psi tilde)
    n: int
    corrections: tuple           # ((S, c), ...)
    anchor: float
    anchor_value: float
    nodes: np.ndarray = field(repr=False)
    cumulative: np.ndarray = field(repr=False)
    delta: float = 0.0
    eta: float = 0.0

    def tent(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros(s.size)
        for s_iv, c in self.corrections:
            s1, s2 = s_iv.half_bounds()
            mid = 0.5 * (s1 + s2)
            rising = (s >= s1) & (s <= mid)
            falling = (s > mid) & (s <= s2)
            out[rising] = 4.0 * c * (s[rising] - s1)
            out[falling] = 4.0 * c * (s2 - s[falling])
        return out

    def tent_slope(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros(s.size)
        for s_iv, c in self.corrections:
            s1, s2 = s_iv.half_bounds()
            mid = 0.5 * (s1 + s2)
            out[(s >= s1) & (s < mid)] = 4.0 * c
            out[(s >= mid) & (s < s2)] = -4.0 * c
        return out

    def horizontal(self, s) -> np.ndarray:
        """Components (phi_{T,2}, ..., phi_{T,2n})."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        vals = self.fit.approximant(s)
        vals[:, self.n - 1] += self.tent(s)
        return vals

    def horizontal_deriv(self, s, cell_source=None) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        probe = s if cell_source is None else np.atleast_1d(np.asarray(cell_source, dtype=float))
        d = self.fit.remainder.derivative(probe) + self.fit.slope[None, :]
        d[:, self.n - 1] += self.tent_slope(probe)
        return d

    def _lift_rhs(self, s, mids) -> np.ndarray:
        """Derivative of the lifted last component, cells taken at mids."""
        n = self.n
        vals = self.fit.approximant(s)
        vals[:, n - 1] += self.tent(s)
        slopes = self.fit.remainder.derivative(mids) + self.fit.slope[None, :]
        slopes[:, n - 1] += self.tent_slope(mids)
        out = -vals[:, n - 1]
        for i in range(2, n + 1):
            ci, cni = i - 2, n + i - 2
            out = out + 0.5 * (vals[:, ci] * slopes[:, cni] - slopes[:, ci] * vals[:, cni])
        return out

    def last(self, s) -> np.ndarray:
        """phi_{T,2n+1}(s) from the cumulative table plus an exact tail."""
        s = np.asarray(s, dtype=float)
        single = s.ndim == 0
        flat = np.atleast_1d(s)
        cells = np.clip(np.searchsorted(self.nodes, flat, side="right") - 1, 0, self.nodes.size - 1)
        bases = self.nodes[cells]
        mids = 0.5 * (bases + flat)
        at_base = self._lift_rhs(bases, mids)
        at_s = self._lift_rhs(flat, mids)
        out = self.cumulative[cells] + 0.5 * (at_base + at_s) * (flat - bases)
        return out[0] if single else out

    def graph_values(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.column_stack([self.horizontal(s), self.last(s)])


def lift_tree(curve: IntrinsicCurve, tree: Tree, fit: TreeFit, eta: float) -> TreeApprox:
    """Build the intrinsic approximant of a tree from its matched fit."""
    n = curve.n
    if n <= 1:
        raise ValueError("the lift needs n > 1; the n = 1 case is prior art")
    delta = eta * eta / (100.0 * n)
    minimal = tree.minimal_intervals()
    psi_breaks = fit.remainder.breaks
    curve_breaks = curve.horizontal.breaks

    def curve_vals_slopes(pts, mids):
        vals = curve.horizontal(pts)
        slopes = curve.horizontal.derivative(mids)
        return vals, slopes

    corrections = []
    for s_iv in minimal:
        a, b = s_iv.left, s_iv.right

        def mismatch(pts, mids):
            vals, slopes = curve_vals_slopes(pts, mids)
            fit_vals = fit.approximant(pts)
            fit_slopes = fit.remainder.derivative(mids) + fit.slope[None, :]
            out = -vals[:, n - 1] + fit_vals[:, n - 1]
            for i in range(2, n + 1):
                ci, cni = i - 2, n + i - 2
                out = out + 0.5 * (
                    vals[:, ci] * slopes[:, cni]
                    - slopes[:, ci] * vals[:, cni]
                    - fit_vals[:, ci] * fit_slopes[:, cni]
                    + fit_slopes[:, ci] * fit_vals[:, cni]
                )
            return out

        inner = merge_breaks(psi_breaks, curve_breaks, lo=a, hi=b)
        integral = _simpson(mismatch, a, b, inner)
        c = -4.0 * integral / (b - a) ** 2
        corrections.append((s_iv, float(c)))

    anchor = tree.top.left
    anchor_value = float(curve.last(anchor))
    lo2, hi2 = tree.top.double_bounds()
    tent_nodes = []
    for s_iv, _ in corrections:
        s1, s2 = s_iv.half_bounds()
        tent_nodes.extend((s1, 0.5 * (s1 + s2), s2))
    nodes = merge_breaks(psi_breaks, np.array(tent_nodes or [anchor]), np.array([anchor]), lo=lo2, hi=hi2)

    approx = TreeApprox(
        tree=tree,
        fit=fit,
        n=n,
        corrections=tuple(corrections),
        anchor=anchor,
        anchor_value=anchor_value,
        nodes=nodes,
        cumulative=np.zeros(nodes.size),
        delta=delta,
        eta=eta,
    )
    # cumulative table of the lift derivative, exact per cell
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    left_vals = approx._lift_rhs(nodes[:-1], mids)
    right_vals = approx._lift_rhs(nodes[1:], mids)
    steps = 0.5 * (left_vals + right_vals) * np.diff(nodes)
    cumulative = np.empty(nodes.size)
    anchor_cell = int(np.searchsorted(nodes, anchor))
    cumulative[anchor_cell] = anchor_value
    cumulative[anchor_cell + 1 :] = anchor_value + np.cumsum(steps[anchor_cell:])
    if anchor_cell > 0:
        cumulative[:anchor_cell] = anchor_value - np.cumsum(steps[:anchor_cell][::-1])[::-1]
    cumulative.setflags(write=False)
    object.__setattr__(approx, "cumulative", cumulative)
    return approx


def verify_intrinsic_approx(curve: IntrinsicCurve, approx: TreeApprox, eta: float, slack: float = 1e-6) -> dict:
    """Sampled graph-distance check d(phi(s), phi_T(s)) <= eta |Q| on 2Q.

    The distance uses the vertical expansion with the bilinear cross term;
    the report carries per-interval worst ratios for plotting and the
    quadratic bound on the vertical part separately.
    """
    n = approx.n
    worst_ratio = 0.0
    worst_vertical = 0.0
    worst = None
    series = []
    for q in sorted(approx.tree.members, key=lambda q: (q.j, q.m)):
        samples = q.samples()
        phi = curve.values(samples)
        phi_t = approx.graph_values(samples)
        horiz = np.linalg.norm(phi[:, : 2 * n - 1] - phi_t[:, : 2 * n - 1], axis=1)
        cross = np.zeros(samples.size)
        for i in range(2, n + 1):
            ci, cni = i - 2, n + i - 2
            cross += 0.5 * (-phi_t[:, ci] * phi[:, cni] + phi[:, ci] * phi_t[:, cni])
        vertical = np.abs(phi[:, -1] - phi_t[:, -1] + cross)
        dist = np.maximum(horiz, np.sqrt(vertical))
        ratios = dist / (eta * q.length)
        idx = int(np.argmax(ratios))
        series.append(
            {
                "interval": [q.j, q.m],
                "sample": float(samples[idx]),
                "ratio": float(ratios[idx]),
            }
        )
        worst_vertical = max(worst_vertical, float(np.max(vertical / (eta * q.length) ** 2)))
        if ratios[idx] > worst_ratio:
            worst_ratio = float(ratios[idx])
            worst = (q, float(samples[idx]))
    return {
        "worst_ratio": worst_ratio,
        "worst_vertical_ratio": worst_vertical,
        "worst_interval": [worst[0].j, worst[0].m] if worst else None,
        "worst_sample": worst[1] if worst else None,
        "series": series,
        "passed": worst_ratio <= 1.0 + scaled(slack) and worst_vertical <= 1.0 + scaled(slack),
    }


def corona_pipeline(curve: IntrinsicCurve, root: DyadicInterval, depth: int, eta: float):
    """End-to-end corona decomposition of an intrinsic 1-Lipschitz curve.

    Returns (Coronization, list of TreeApprox, report).  Raises for n = 1
    (prior art) and for curves whose sampled intrinsic constant exceeds 1
    (rescale first).
    """
    n = curve.n
    if n <= 1:
        raise ValueError(
            "corona decomposition implemented for n > 1 only; the first "
            "Heisenberg group case is prior art"
        )
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    lo2, hi2 = root.double_bounds()
    probe = curve.sample(np.linspace(lo2, hi2, 257))
    lip = intrinsic_lip_constant(probe)
    if lip > 1.0 + scaled(1e-9):
        raise ValueError(
            f"sampled intrinsic constant {lip:.6g} exceeds 1; rescale the map first"
        )
    delta = eta * eta / (100.0 * n)
    coronization, fits = euclidean_corona(curve.horizontal, root, depth, delta)
    approxes = []
    matching_errors = []
    tree_reports = []
    for fit in fits:
        matched, _ = boundary_match(fit.tree, fit, curve.horizontal, delta)
        approx = lift_tree(curve, fit.tree, matched, eta)
        approxes.append(approx)
        bp = fit.tree.boundary_points()
        err = float(np.max(np.abs(approx.last(bp) - curve.last(bp)))) if bp.size else 0.0
        matching_errors.append(err / max(fit.tree.top.length, 1e-300) ** 2)
        tree_report = verify_intrinsic_approx(curve, approx, eta)
        tree_report["top"] = [fit.tree.top.j, fit.tree.top.m]
        tree_report["matching_scaled"] = matching_errors[-1]
        tree_reports.append(tree_report)
    report = {
        "eta": eta,
        "delta": delta,
        "sampled_intrinsic_constant": lip,
        "packing_constant": coronization.packing_constant,
        "tree_count": len(approxes),
        "bad_count": len(coronization.bad),
        "worst_ratio": max((r["worst_ratio"] for r in tree_reports), default=0.0),
        "worst_matching_scaled": max(matching_errors, default=0.0),
        "trees": tree_reports,
        "passed": all(r["passed"] for r in tree_reports),
        "flags": list(coronization.flags),
    }
    return coronization, approxes, report


# ---------------------------------------------------------------------------
# rescaling and reparameterization


def rescale_values(values: np.ndarray, n: int, factor: float, direction: str = "forward") -> np.ndarray:
    """Anisotropic rescaling of value vectors (phi_2, ..., phi_{2n+1}).

    Forward divides the components 2..n and n+2..2n by the factor and the
    components n+1 and 2n+1 by its square; backward multiplies.  The forward
    map takes an intrinsic N-Lipschitz sample to an intrinsic 1-Lipschitz
    sample when factor = N.
    """
    if factor < 1.0:
        raise ValueError("rescaling factor must be >= 1")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    values = np.array(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[1] != 2 * n:
        raise ValueError(f"value vectors must have length {2 * n}")
    scale = np.ones(2 * n)
    scale[: n - 1] = factor               # components 2..n
    scale[n - 1] = factor * factor        # component n+1
    scale[n : 2 * n - 1] = factor         # components n+2..2n
    scale[2 * n - 1] = factor * factor    # component 2n+1
    return values / scale if direction == "forward" else values * scale


@dataclass(frozen=True)
class ReparamGraph:
    direction: np.ndarray        # v_1 spanning V_L
    x_grid: np.ndarray
    z_table: np.ndarray
    components: np.ndarray       # graph coordinates over span(v_2, ..., v_{2n})
    measured_constant: float
    basis: np.ndarray = field(repr=False)

    def resample(self, count: int) -> np.ndarray:
        """Graph points at uniformly spaced z, as vectors in R^{2n}."""
        z = np.linspace(self.z_table[0], self.z_table[-1], count)
        cols = [np.interp(z, self.z_table, self.components[:, c]) for c in range(self.components.shape[1])]
        coords = np.column_stack([z] + cols)
        return coords @ self.basis.T


def reparameterize_over_VL(psi, a: np.ndarray, grid: np.ndarray, eta: float) -> ReparamGraph:
    """Rewrite the graph of psi + L (L(x) = a x) over the tilted axis V_L.

    Tabulates z(x) = <(x, psi(x) + a x), v_1>, checks the bi-Lipschitz lower
    bound sqrt(2) - 1 on grid pairs, and measures the horizontal intrinsic
    constant of the graph over V_L, asserting it stays below
    REPARAM_C * sqrt(eta).
    """
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    a = np.asarray(a, dtype=float).reshape(-1)
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with >= 2 points")
    v1 = np.concatenate([[1.0], a])
    v1 = v1 / np.linalg.norm(v1)
    dim = v1.size
    # Householder reflection mapping e_1 to v_1; its columns are an ONB
    e1 = np.zeros(dim)
    e1[0] = 1.0
    u = e1 - v1
    norm_u = np.linalg.norm(u)
    basis = np.eye(dim) if norm_u < 1e-14 else np.eye(dim) - 2.0 * np.outer(u, u) / norm_u**2
    points = np.column_stack([grid, np.atleast_2d(psi(grid)) + grid[:, None] * a[None, :]])
    coords = points @ basis
    z = coords[:, 0]
    slopes = np.diff(z) / np.diff(grid)
    floor = (np.sqrt(2.0) - 1.0) * (1.0 - scaled(1e-9))
    if np.any(slopes < floor):
        raise ValueError("z(x) fails the bi-Lipschitz lower bound sqrt(2) - 1")
    diff = points[None, :, :] - points[:, None, :]
    along = diff @ v1
    ortho = np.linalg.norm(diff - along[:, :, None] * v1[None, None, :], axis=2)
    off = ~np.eye(grid.size, dtype=bool)
    measured = float(np.max(ortho[off] / np.abs(along[off])))
    bound = REPARAM_C * np.sqrt(eta)
    if measured > bound * (1.0 + scaled(1e-9)):
        raise ValueError(
            f"measured horizontal constant {measured:.3g} over V_L exceeds "
            f"{REPARAM_C} * sqrt(eta) = {bound:.3g}"
        )
    return ReparamGraph(
        direction=v1,
        x_grid=grid,
        z_table=z,
        components=coords[:, 1:],
        measured_constant=measured,
        basis=basis,
    )
