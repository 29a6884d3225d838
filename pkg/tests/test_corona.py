"""Dyadic machinery, coronization, endpoint matching, and the intrinsic lift."""
import numpy as np
import pytest

from heisgraph.corona import (
    Coronization,
    DyadicInterval,
    ReparamGraph,
    Tree,
    boundary_match,
    carleson_sum,
    corona_pipeline,
    euclidean_corona,
    lift_tree,
    measure_packing_constant,
    reparameterize_over_VL,
    rescale_values,
    verify_intrinsic_approx,
    verify_tree_fit,
)
from heisgraph.generators import intrinsic_curve, random_piecewise_horizontal
from heisgraph.heisenberg import SampledMap, SubgroupSplit, intrinsic_lip_constant
from heisgraph.piecewise import IntrinsicCurve, PiecewiseLinear


def unit_root():
    return DyadicInterval(0, 0)


def test_dyadic_navigation():
    q = unit_root()
    assert (q.left, q.right, q.length) == (0.0, 1.0, 1.0)
    c0, c1 = q.children()
    assert (c0.left, c0.right) == (0.0, 0.5)
    assert (c1.left, c1.right) == (0.5, 1.0)
    assert q.double_bounds() == (-0.5, 1.5)
    assert q.half_bounds() == (0.25, 0.75)
    assert c0.parent() == q and c1.parent() == q
    assert q.contains(c0) and not c0.contains(q)
    deep = DyadicInterval(5, 17)
    assert deep.parent().children()[1] == deep
    assert deep.length == 2.0**-5


def test_carleson_sums():
    q0 = unit_root()
    assert carleson_sum([], q0) == 0.0
    # all descendants down to depth d sum to (d + 1) |Q0|
    collection = []
    level = [q0]
    depth = 4
    for _ in range(depth + 1):
        collection.extend(level)
        level = [c for q in level for c in q.children()]
    assert carleson_sum(collection, q0) == pytest.approx(depth + 1)
    # a disjoint cover contributes exactly |Q0|
    cover = [DyadicInterval(3, m) for m in range(8)]
    assert carleson_sum(cover, q0) == pytest.approx(1.0)
    # intervals outside Q0 do not count
    assert carleson_sum([DyadicInterval(0, 1)], q0) == 0.0


def linear_psi(a):
    a = np.asarray(a, dtype=float)

    def psi(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return s[:, None] * a[None, :]

    return psi


def test_corona_linear_map_single_tree():
    a = np.array([0.4, -0.2, 0.1])
    coron, fits = euclidean_corona(linear_psi(a), unit_root(), 5, 0.1)
    assert coron.bad == ()
    assert len(coron.trees) == 1
    fit = fits[0]
    np.testing.assert_allclose(fit.slope, a, atol=1e-12)
    assert np.max(np.abs(fit.remainder.values)) <= 1e-12
    assert verify_tree_fit(linear_psi(a), fit, 0.1)["passed"]
    # every grid interval belongs to the single tree
    assert len(coron.trees[0].members) == 2**6 - 1


def test_corona_zero_map():
    coron, fits = euclidean_corona(linear_psi(np.zeros(3)), unit_root(), 4, 0.2)
    assert coron.bad == ()
    np.testing.assert_array_equal(fits[0].slope, np.zeros(3))


def kink_psi(n, pos=1.0 / 3.0):
    m = 2 * n - 1

    def psi(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros((s.size, m))
        out[:, 0] = np.minimum(np.abs(s - pos), 1.0)
        return out

    return psi


def test_corona_kink_map_invariants():
    psi = kink_psi(2)
    root, depth, delta = unit_root(), 8, 0.1
    coron, fits = euclidean_corona(psi, root, depth, delta)
    grid = coron.grid()
    good = coron.good()
    bad = set(coron.bad)
    # partition: every interval in exactly one side
    assert good | bad == set(grid)
    assert not (good & bad)
    # trees are disjoint and coherent
    seen = set()
    for tree in coron.trees:
        assert not (tree.members & seen)
        seen |= tree.members
        assert tree.check_coherence()
    # stopping happened near the kink: more than one tree
    assert len(coron.trees) > 1
    assert coron.packing_constant <= 50.0
    for fit in fits:
        assert verify_tree_fit(psi, fit, delta)["passed"]


def test_packing_constant_is_exhaustive_ratio():
    coron, _ = euclidean_corona(kink_psi(2), unit_root(), 6, 0.1)
    tops = [t.top for t in coron.trees]
    worst = 0.0
    for q in coron.grid():
        worst = max(
            worst,
            carleson_sum(coron.bad, q) / q.length,
            carleson_sum(tops, q) / q.length,
        )
    assert coron.packing_constant == pytest.approx(worst, rel=1e-12)


def test_boundary_match_exact_fit_gives_zero_corrections():
    psi = kink_psi(2)
    delta = 0.1
    coron, fits = euclidean_corona(psi, unit_root(), 6, delta)
    fit = max(fits, key=lambda f: len(f.tree.members))
    matched, corrections = boundary_match(fit.tree, fit, psi, delta)
    for s_iv, c in corrections:
        assert np.linalg.norm(c) <= 1e-10
    for s_iv in fit.tree.minimal_intervals():
        for endpoint in (s_iv.left, s_iv.right):
            got = matched.approximant(np.array([endpoint]))[0]
            np.testing.assert_allclose(got, psi(np.array([endpoint]))[0], atol=1e-10)


def test_boundary_match_synthetic_gap():
    # a remainder displaced at one endpoint gets a linear ramp with c = gap / |S|
    psi = linear_psi(np.array([0.5, 0.0, 0.0]))
    delta = 0.4
    coron, fits = euclidean_corona(psi, unit_root(), 3, delta)
    fit = fits[0]
    g = 0.01
    vals = fit.remainder.values.copy()
    # displace the value at the right endpoint of the first minimal interval
    s0 = fit.tree.minimal_intervals()[0]
    idx = int(np.argmin(np.abs(fit.remainder.breaks - s0.right)))
    vals[idx, 0] -= g
    from heisgraph.corona import TreeFit

    broken = TreeFit(fit.tree, fit.slope, PiecewiseLinear(fit.remainder.breaks, vals))
    matched, corrections = boundary_match(fit.tree, broken, psi, delta)
    by_interval = {s: c for s, c in corrections}
    assert by_interval[s0][0] == pytest.approx(g / s0.length, rel=1e-9)
    got = matched.approximant(np.array([s0.right]))[0]
    np.testing.assert_allclose(got, psi(np.array([s0.right]))[0], atol=1e-12)


def test_boundary_match_keeps_lipschitz_budget():
    psi = kink_psi(2)
    delta = 0.1
    coron, fits = euclidean_corona(psi, unit_root(), 7, delta)
    for fit in fits:
        matched, corrections = boundary_match(fit.tree, fit, psi, delta)
        for _, c in corrections:
            assert np.linalg.norm(c) <= delta / 4 * (1 + 1e-9)
        assert matched.remainder.lipschitz_constant() <= 3.0 / 8.0 * delta * (1 + 1e-9)


def pipeline_curve(seed=3, n=2, lipschitz=0.3):
    curve = intrinsic_curve(seed, n, lipschitz, breakpoint_count=8, domain=(-0.5, 1.5))
    return curve


def test_corona_pipeline_end_to_end():
    curve = pipeline_curve()
    coron, approxes, report = corona_pipeline(curve, unit_root(), 8, eta=0.3)
    assert report["passed"], report
    n = curve.n
    delta = report["delta"]
    assert delta == pytest.approx(0.3**2 / (100 * n))
    for approx in approxes:
        for s_iv, c in approx.corrections:
            assert abs(c) <= 24 * n * delta * (1 + 1e-9)
            s1, s2 = s_iv.half_bounds()
            # tent size and slope bounds
            xs = np.linspace(s_iv.left, s_iv.right, 33)
            tent = approx.tent(xs)
            assert np.max(np.abs(tent)) <= 24 * n * delta * s_iv.length * (1 + 1e-9)
            slopes = np.diff(tent) / np.diff(xs)
            assert np.max(np.abs(slopes)) <= 96 * n * delta * (1 + 1e-9)
    assert report["worst_matching_scaled"] <= 1e-6
    assert report["packing_constant"] <= 50.0


def test_tent_integral_identity():
    curve = pipeline_curve(seed=11)
    coron, approxes, report = corona_pipeline(curve, unit_root(), 6, eta=0.3)
    checked = 0
    for approx in approxes:
        for s_iv, c in approx.corrections:
            if abs(c) < 1e-15:
                continue
            xs = np.linspace(s_iv.left, s_iv.right, 4097)
            tent = approx.tent(xs)
            integral = np.trapezoid(tent, xs)
            assert integral == pytest.approx(c * s_iv.length**2 / 4.0, rel=1e-5, abs=1e-14)
            checked += 1
    assert checked > 0


def test_pipeline_matching_at_minimal_endpoints():
    curve = pipeline_curve(seed=5)
    coron, approxes, report = corona_pipeline(curve, unit_root(), 7, eta=0.3)
    for approx in approxes:
        bp = approx.tree.boundary_points()
        got = approx.last(bp)
        want = curve.last(bp)
        tol = 1e-6 * approx.tree.top.length**2
        assert np.max(np.abs(got - want)) <= tol


def test_pipeline_sharper_eta_gives_more_trees():
    curve = pipeline_curve(seed=7)
    _, approx_loose, rep_loose = corona_pipeline(curve, unit_root(), 8, eta=0.3)
    _, approx_tight, rep_tight = corona_pipeline(curve, unit_root(), 8, eta=0.1)
    assert rep_loose["passed"] and rep_tight["passed"]
    assert rep_tight["tree_count"] >= rep_loose["tree_count"]


def test_pipeline_rejects_n1_and_steep_maps():
    curve_n1 = intrinsic_curve(0, 1, 0.2, domain=(-0.5, 1.5))
    with pytest.raises(ValueError, match="n > 1"):
        corona_pipeline(curve_n1, unit_root(), 4, eta=0.3)
    steep = intrinsic_curve(1, 2, 2.0, domain=(-0.5, 1.5))
    with pytest.raises(ValueError, match="rescale"):
        corona_pipeline(steep, unit_root(), 4, eta=0.3)


def test_pipeline_trivial_zero_curve():
    horizontal = PiecewiseLinear(np.array([-0.5, 1.5]), np.zeros((2, 3)))
    curve = IntrinsicCurve(horizontal)
    coron, approxes, report = corona_pipeline(curve, unit_root(), 4, eta=0.3)
    assert report["passed"]
    assert report["worst_ratio"] == 0.0
    assert len(approxes) == 1


def test_fault_injection_detected_by_verifier():
    curve = pipeline_curve(seed=9)
    coron, approxes, report = corona_pipeline(curve, unit_root(), 6, eta=0.3)
    assert report["passed"]
    target = max(approxes, key=lambda a: len(a.tree.members))
    eta = 0.3
    bump = (eta * target.tree.top.length) ** 2 * 2.0
    corrupted = np.array(target.cumulative)
    corrupted[corrupted.size // 2] += bump
    object.__setattr__(target, "cumulative", corrupted)
    verdict = verify_intrinsic_approx(curve, target, eta)
    assert not verdict["passed"]
    assert verdict["worst_interval"] is not None


def test_rescale_identity_and_formula():
    vals = np.array([[1.0, 2.0, 3.0, 4.0], [0.5, -1.0, 2.0, 0.0]])
    np.testing.assert_array_equal(rescale_values(vals, 2, 1.0), vals)
    fwd = rescale_values(vals, 2, 2.0)
    np.testing.assert_array_equal(fwd[0], [0.5, 0.5, 1.5, 1.0])
    back = rescale_values(fwd, 2, 2.0, "backward")
    np.testing.assert_array_equal(back, vals)
    with pytest.raises(ValueError):
        rescale_values(vals, 2, 0.5)


def test_rescale_reduces_intrinsic_constant():
    curve = intrinsic_curve(13, 2, 0.8, domain=(0.0, 1.0))
    xs = np.linspace(0.0, 1.0, 61)
    sm = curve.sample(xs)
    lip = intrinsic_lip_constant(sm)
    factor = max(lip, 1.0)
    scaled_vals = rescale_values(sm.values, curve.n, factor)
    scaled_map = SampledMap(sm.split, sm.domain, scaled_vals)
    assert intrinsic_lip_constant(scaled_map) <= 1.0 + 1e-9


def test_reparameterize_zero_psi():
    a = np.array([0.5, -0.25, 0.0])

    def psi(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.zeros((s.size, 3))

    grid = np.linspace(0.0, 1.0, 33)
    graph = reparameterize_over_VL(psi, a, grid, eta=0.01)
    assert graph.measured_constant <= 1e-12
    # graph points round trip through the basis
    original = np.column_stack([grid, grid[:, None] * a[None, :]])
    resampled = graph.resample(33)
    gaps = np.min(np.linalg.norm(original[:, None, :] - resampled[None, :, :], axis=2), axis=1)
    assert np.max(gaps) <= 1e-9


def test_reparameterize_axis_aligned_identity():
    def psi(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return 0.05 * np.column_stack([np.sin(3 * s), np.cos(2 * s), s * 0])

    grid = np.linspace(0.0, 2.0, 65)
    graph = reparameterize_over_VL(psi, np.zeros(3), grid, eta=0.2)
    np.testing.assert_allclose(graph.direction, [1.0, 0.0, 0.0, 0.0], atol=0)
    np.testing.assert_allclose(graph.z_table, grid, atol=0)


def test_reparameterize_random_eta_bound():
    rng = np.random.default_rng(2)
    a = rng.uniform(-1, 1, size=3)
    eta = 0.09
    pl = random_piecewise_horizontal(21, 2, eta / np.sqrt(3), 6, (0.0, 1.0))

    def psi(s):
        return pl(np.atleast_1d(np.asarray(s, dtype=float)))

    grid = np.linspace(0.0, 1.0, 101)
    graph = reparameterize_over_VL(psi, a, grid, eta=eta)
    from heisgraph.corona import REPARAM_C

    assert graph.measured_constant <= REPARAM_C * np.sqrt(eta)
    slopes = np.diff(graph.z_table) / np.diff(grid)
    assert np.min(slopes) >= (np.sqrt(2) - 1) * (1 - 1e-9)
