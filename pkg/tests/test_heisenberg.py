"""Group arithmetic, projections, graph maps, and the Lipschitz residual."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisgraph.heisenberg import (
    HeisPoint,
    ResidualPair,
    SampledMap,
    SubgroupSplit,
    dilation,
    distance,
    graph_map,
    heis_norm,
    identity,
    ilg_residual,
    intrinsic_lip_constant,
    inverse,
    pairwise_w_norms,
    product,
    project_v,
    project_w,
)

coord = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


def random_point(rng, n):
    return HeisPoint(rng.uniform(-5, 5, size=2 * n), rng.uniform(-5, 5))


def test_product_hand_values_n1():
    p = HeisPoint([1.0, 0.0], 0.0)
    q = HeisPoint([0.0, 1.0], 0.0)
    r = product(p, q)
    np.testing.assert_allclose(r.coords(), [1.0, 1.0, 0.5], rtol=0, atol=0)


def test_product_hand_values_n2():
    p = HeisPoint([1.0, 0.0, 0.0, 0.0], 0.0)
    q = HeisPoint([0.0, 0.0, 1.0, 0.0], 0.0)
    r = product(p, q)
    np.testing.assert_allclose(r.coords(), [1.0, 0.0, 1.0, 0.0, 0.5], rtol=0, atol=0)


def test_product_identity():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        p = random_point(rng, n)
        np.testing.assert_array_equal(product(p, identity(n)).coords(), p.coords())
        np.testing.assert_array_equal(product(identity(n), p).coords(), p.coords())


def test_product_dimension_mismatch():
    with pytest.raises(ValueError):
        product(identity(1), identity(2))


def test_inverse_is_negation():
    p = HeisPoint([1.0, 2.0], 3.0)
    np.testing.assert_array_equal(inverse(p).coords(), [-1.0, -2.0, -3.0])
    np.testing.assert_array_equal(inverse(identity(2)).coords(), identity(2).coords())


def test_inverse_cancels_exactly():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        p = random_point(rng, n)
        np.testing.assert_array_equal(product(inverse(p), p).coords(), identity(n).coords())
        np.testing.assert_array_equal(product(p, inverse(p)).coords(), identity(n).coords())


@given(
    st.lists(coord, min_size=2, max_size=2),
    st.lists(coord, min_size=2, max_size=2),
    st.lists(coord, min_size=2, max_size=2),
    coord,
    coord,
    coord,
)
@settings(max_examples=200, deadline=None)
def test_associativity_hypothesis(xa, xb, xc, ta, tb, tc):
    a, b, c = HeisPoint(xa, ta), HeisPoint(xb, tb), HeisPoint(xc, tc)
    left = product(product(a, b), c).coords()
    right = product(a, product(b, c)).coords()
    scale = 1.0 + np.max(np.abs(np.concatenate([left, right])))
    np.testing.assert_allclose(left, right, rtol=0, atol=1e-12 * scale)


def test_norm_values():
    assert heis_norm(HeisPoint([0.0, 0.0], 4.0)) == 2.0
    assert heis_norm(HeisPoint([3.0, 4.0, 0.0, 0.0, 0.0, 0.0], 0.0)) == 5.0
    assert heis_norm(HeisPoint([1.0, 0.0], 9.0)) == 3.0


def test_distance_basics():
    p = HeisPoint([1.0, 0.0], 0.0)
    assert distance(p, p) == 0.0
    assert distance(p, identity(1)) == 1.0


def test_left_invariance():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3):
        g, p, q = (random_point(rng, n) for _ in range(3))
        d0 = distance(p, q)
        d1 = distance(product(g, p), product(g, q))
        assert abs(d0 - d1) <= 1e-12 * (1.0 + d0)


def test_dilation():
    p = HeisPoint([1.0, 0.0], 1.0)
    assert dilation(1.0, p).coords() == pytest.approx([1.0, 0.0, 1.0], abs=0)
    assert dilation(2.0, p).coords() == pytest.approx([2.0, 0.0, 4.0], abs=0)
    with pytest.raises(ValueError):
        dilation(0.0, p)
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = random_point(rng, 2)
        r = rng.uniform(0.1, 10.0)
        assert abs(heis_norm(dilation(r, q)) - r * heis_norm(q)) <= 1e-12 * (1 + r * heis_norm(q))


def test_projections_hand_case():
    split = SubgroupSplit(1, 1)
    p = HeisPoint([1.0, 2.0], 3.0)
    np.testing.assert_array_equal(project_v(p, split).coords(), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(project_w(p, split).coords(), [0.0, 2.0, 2.0])


def test_projection_of_v_point():
    split = SubgroupSplit(2, 1)
    p = HeisPoint([1.5, 0.0, 0.0, 0.0], 0.0)
    np.testing.assert_array_equal(project_v(p, split).coords(), p.coords())
    np.testing.assert_array_equal(project_w(p, split).coords(), identity(2).coords())


def test_projection_recomposition_exact():
    rng = np.random.default_rng(4)
    for n, k in [(1, 1), (2, 1), (2, 2), (3, 2)]:
        split = SubgroupSplit(n, k)
        for _ in range(100):
            p = random_point(rng, n)
            back = product(project_v(p, split), project_w(p, split))
            scale = 1.0 + np.max(np.abs(p.coords()))
            np.testing.assert_allclose(back.coords(), p.coords(), rtol=0, atol=1e-12 * scale)


def test_graph_map_cases():
    split = SubgroupSplit(1, 1)
    assert graph_map([2.0], [0.0, 0.0], split).coords() == pytest.approx([2.0, 0.0, 0.0], abs=0)
    # t = phi_3 + 0.5 * v * phi_2 = 5 + 0.5 * 2 * 3 = 8
    assert graph_map([2.0], [3.0, 5.0], split).coords() == pytest.approx([2.0, 3.0, 8.0], abs=0)


def test_graph_map_round_trip():
    rng = np.random.default_rng(5)
    for n, k in [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]:
        split = SubgroupSplit(n, k)
        for _ in range(50):
            v = rng.uniform(-3, 3, size=k)
            val = rng.uniform(-3, 3, size=split.w_dim)
            point = graph_map(v, val, split)
            w_part = project_w(point, split)
            recovered = np.append(w_part.x[k:], w_part.t)
            scale = 1.0 + np.max(np.abs(val))
            np.testing.assert_allclose(recovered, val, rtol=0, atol=1e-12 * scale)
            np.testing.assert_array_equal(project_v(point, split).x[:k], v)


def test_residual_zero_map():
    split = SubgroupSplit(2, 1)
    res = ilg_residual([0.0], np.zeros(4), [1.0], np.zeros(4), split)
    assert res.w_norm() == 0.0
    assert res.h_value == 0.0


def test_residual_hand_case_k1n1():
    # phi_2(v) = v, phi_3 = 0: H(1, 2) = 0 + psi(1) * (2 - 1) = 1
    split = SubgroupSplit(1, 1)
    res = ilg_residual([1.0], [1.0, 0.0], [2.0], [2.0, 0.0], split)
    assert res.h_value == pytest.approx(1.0, abs=0)
    assert res.vertical_homog == pytest.approx(1.0, abs=0)


def test_residual_matches_group_arithmetic():
    rng = np.random.default_rng(6)
    for n, k in [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3), (3, 3)]:
        n, k = max(n, k), min(n, k)
        split = SubgroupSplit(n, k)
        for _ in range(200):
            v = rng.uniform(-3, 3, size=k)
            w = rng.uniform(-3, 3, size=k)
            v_val = rng.uniform(-3, 3, size=split.w_dim)
            w_val = rng.uniform(-3, 3, size=split.w_dim)
            res = ilg_residual(v, v_val, w, w_val, split)
            direct = project_w(
                product(inverse(graph_map(v, v_val, split)), graph_map(w, w_val, split)),
                split,
            )
            assert abs(res.w_norm() - heis_norm(direct)) <= 1e-10


def test_vertical_homog_consistency():
    pair = ResidualPair(np.array([1.0, 2.0]), -4.0)
    assert pair.vertical_homog == 2.0
    assert pair.w_norm() == pytest.approx(np.sqrt(5.0))


def test_pairwise_matrix_matches_scalar_path():
    rng = np.random.default_rng(7)
    split = SubgroupSplit(3, 2)
    dom = rng.uniform(-2, 2, size=(8, 2))
    vals = rng.uniform(-2, 2, size=(8, split.w_dim))
    sm = SampledMap(split, dom, vals)
    mat = pairwise_w_norms(sm)
    for a in range(8):
        for b in range(8):
            res = ilg_residual(dom[a], vals[a], dom[b], vals[b], split)
            assert abs(mat[a, b] - res.w_norm()) <= 1e-12


def test_lip_constant_zero_map():
    split = SubgroupSplit(1, 1)
    sm = SampledMap(split, [[0.0], [1.0], [2.0]], np.zeros((3, 2)))
    assert intrinsic_lip_constant(sm) == 0.0


def test_lip_constant_is_pairwise_supremum():
    split = SubgroupSplit(1, 1)
    dom = np.array([[0.0], [1.0], [2.0]])
    vals = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 4.0]])
    sm = SampledMap(split, dom, vals)
    got = intrinsic_lip_constant(sm)
    expect = 0.0
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            r = ilg_residual(dom[a], vals[a], dom[b], vals[b], split)
            expect = max(expect, r.w_norm() / abs(dom[b, 0] - dom[a, 0]))
    assert got == pytest.approx(expect, rel=1e-14)
    # the violating pair (1 -> 2) dominates: H = 4, |dv| = 1, sqrt(4)/1 = 2
    assert got == pytest.approx(2.0)


def test_lip_constant_potential_map_on_fine_grid():
    # psi(v) = v with last component -v^2/2: the graph difference gives
    # H(v, v') = -(v' - v)^2 / 2, so the vertical ratio is 1/sqrt(2) and the
    # horizontal ratio 1 dominates at every pair
    split = SubgroupSplit(1, 1)
    dom = np.linspace(-1.0, 1.0, 81)[:, None]
    vals = np.column_stack([dom[:, 0], -0.5 * dom[:, 0] ** 2])
    sm = SampledMap(split, dom, vals)
    assert intrinsic_lip_constant(sm) == pytest.approx(1.0, rel=1e-12)


def test_lip_constant_requires_two_points():
    split = SubgroupSplit(1, 1)
    sm = SampledMap(split, [[0.0]], [[0.0, 0.0]])
    with pytest.raises(ValueError):
        intrinsic_lip_constant(sm)


def test_duplicate_domain_points_rejected():
    split = SubgroupSplit(1, 1)
    with pytest.raises(ValueError):
        SampledMap(split, [[0.0], [0.0]], [[0.0, 0.0], [1.0, 0.0]])


def test_sampled_map_shape_checks():
    split = SubgroupSplit(2, 1)
    with pytest.raises(ValueError):
        SampledMap(split, [[0.0], [1.0]], [[0.0, 0.0], [0.0, 0.0]])
