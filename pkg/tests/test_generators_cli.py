"""Generators, file formats, and the command-line surface."""
import json
import os

import numpy as np
import pytest

from heisgraph.cli import main
from heisgraph.generators import generate_ilg_k1, generate_tame_kn, intrinsic_curve
from heisgraph.heisenberg import intrinsic_lip_constant
from heisgraph.prng import SplitMix64
from heisgraph.serialization import (
    canonical_dumps,
    grid_function_from_obj,
    grid_function_to_obj,
    jet_from_obj,
    jet_to_obj,
    sampled_map_from_obj,
    sampled_map_to_obj,
)
from heisgraph.tame import check_ode_k1, check_tame, estimate_tame_constants, tame_to_ilg
from heisgraph.whitney import JetData


def test_splitmix_reference_vector():
    # first outputs for seed 0 of the splitmix64 recurrence
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert rng.next_u64() == 0x06C45D188009454F


def test_splitmix_uniform_range():
    rng = SplitMix64(42)
    vals = [rng.uniform(-1, 1) for _ in range(1000)]
    assert all(-1 <= v < 1 for v in vals)
    assert abs(np.mean(vals)) < 0.1


def test_generator_determinism():
    a = generate_ilg_k1(123, 2, 0.4)
    b = generate_ilg_k1(123, 2, 0.4)
    np.testing.assert_array_equal(a.values, b.values)
    c = generate_ilg_k1(124, 2, 0.4)
    assert np.any(a.values != c.values)


def test_generated_grid_satisfies_derivative_identity():
    grid = generate_ilg_k1(7, 2, 0.5, breakpoint_count=8, nodes_per_cell=125)
    assert abs(grid.spacing - 1e-3) < 1e-12
    assert check_ode_k1(grid) <= 10.0 * grid.spacing


def test_generated_zero_lipschitz_is_affine_last():
    grid = generate_ilg_k1(5, 2, 0.0, breakpoint_count=4)
    xs = grid.axis_coords(0)
    # horizontal components constant, last component affine with slope
    # phi_{n+1}
    for col in range(3):
        assert np.max(np.abs(np.diff(grid.values[:, col]))) == 0.0
    slope = np.diff(grid.values[:, -1]) / np.diff(xs)
    np.testing.assert_allclose(slope, grid.values[0, 1], rtol=1e-12)


def test_generated_curve_has_finite_intrinsic_constant():
    curve = intrinsic_curve(9, 2, 0.3)
    sm = curve.sample(np.linspace(0, 1, 41))
    lip = intrinsic_lip_constant(sm)
    assert 0 < lip <= 1.0


def test_curve_matches_grid_sample():
    seed, n = 17, 2
    curve = intrinsic_curve(seed, n, 0.4, breakpoint_count=8, domain=(0.0, 1.0))
    grid = generate_ilg_k1(seed, n, 0.4, breakpoint_count=8, domain=(0.0, 1.0))
    xs = grid.axis_coords(0)
    np.testing.assert_allclose(grid.values[:, :3], curve.horizontal(xs), atol=1e-12)
    np.testing.assert_allclose(grid.values[:, -1], -curve.last(xs), atol=1e-12)


def test_generate_tame_kn_is_tame():
    sm = generate_tame_kn(11, 2, (-1.0, 1.0), 7)
    constants = estimate_tame_constants(sm)
    assert check_tame(sm, constants).passed
    # the sign-flipped counterpart is intrinsic Lipschitz with the formula bound
    _, lip = tame_to_ilg(sm, constants)
    flipped = sm.values.copy()
    flipped[:, -1] = -flipped[:, -1]
    from heisgraph.heisenberg import SampledMap

    intrinsic = SampledMap(sm.split, sm.domain, flipped)
    assert intrinsic_lip_constant(intrinsic) <= lip * (1 + 1e-9)


def test_tame_kn_determinism():
    a = generate_tame_kn(3, 2)
    b = generate_tame_kn(3, 2)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.domain, b.domain)


def test_serialization_round_trips(tmp_path):
    grid = generate_ilg_k1(1, 2, 0.3, breakpoint_count=4)
    obj = grid_function_to_obj(grid)
    back = grid_function_from_obj(json.loads(json.dumps(obj)))
    np.testing.assert_array_equal(back.values, grid.values)

    sm = generate_tame_kn(1, 2)
    back_sm = sampled_map_from_obj(json.loads(json.dumps(sampled_map_to_obj(sm))))
    np.testing.assert_array_equal(back_sm.values, sm.values)

    jet = JetData([[0.0], [1.0]], [0.0, 0.5], [[0.0], [1.0]])
    back_jet = jet_from_obj(json.loads(json.dumps(jet_to_obj(jet))))
    np.testing.assert_array_equal(back_jet.points, jet.points)


def test_canonical_dumps_is_stable():
    payload = {"b": 1.0 / 3.0, "a": [1e-17, 2.5]}
    assert canonical_dumps(payload) == canonical_dumps(json.loads(canonical_dumps(payload)))


def run_cli(*argv):
    return main(list(argv))


def test_cli_generate_verify_roundtrip(tmp_path):
    path = tmp_path / "map.json"
    assert run_cli("generate", "--kind", "ilg-k1", "--seed", "9", "--n", "2", "--out", str(path)) == 0
    report_path = tmp_path / "verify.json"
    assert run_cli("verify", "--input", str(path), "--out", str(report_path)) == 0
    report = json.loads(report_path.read_text())
    assert report["passed"]


def test_cli_byte_identical_outputs(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    run_cli("generate", "--kind", "ilg-k1", "--seed", "5", "--out", str(p1))
    run_cli("generate", "--kind", "ilg-k1", "--seed", "5", "--out", str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_cli_verify_tame_constants_failure(tmp_path):
    map_path = tmp_path / "map.json"
    run_cli("generate", "--kind", "tame-kn", "--seed", "2", "--n", "2", "--out", str(map_path))
    constants_path = tmp_path / "c.json"
    constants_path.write_text(json.dumps({"per_component": [0.0, 0.0], "quadratic": 0.0}))
    report_path = tmp_path / "r.json"
    status = run_cli(
        "verify",
        "--input",
        str(map_path),
        "--constants",
        str(constants_path),
        "--out",
        str(report_path),
    )
    assert status == 1
    report = json.loads(report_path.read_text())
    assert not report["passed"]
    assert "pair" in report["witness"]


def test_cli_extend_pipeline(tmp_path):
    map_path = tmp_path / "map.json"
    run_cli(
        "generate", "--kind", "tame-kn", "--seed", "4", "--n", "2", "--count", "5",
        "--out", str(map_path),
    )
    # convert the tame sample to an intrinsic one by flipping the last column
    obj = json.loads(map_path.read_text())
    for row in obj["values"]:
        row[-1] = -row[-1]
    intrinsic_path = tmp_path / "intrinsic.json"
    intrinsic_path.write_text(json.dumps(obj))
    audit_path = tmp_path / "audit.json"
    audit_path.write_text(json.dumps({"per_axis": 9, "inflate": 2.0}))
    out = tmp_path / "ext.json"
    status = run_cli(
        "extend", "--input", str(intrinsic_path), "--audit-grid", str(audit_path),
        "--out", str(out),
    )
    assert status == 0
    report = json.loads(out.read_text())
    assert report["restriction_max_error"] <= 1e-10
    assert report["measured_lipschitz"] <= report["formula_lipschitz"] * (1 + 1e-9)


def test_cli_corona_and_report(tmp_path):
    map_path = tmp_path / "map.json"
    run_cli(
        "generate", "--kind", "ilg-k1", "--seed", "3", "--n", "2",
        "--lipschitz", "0.3", "--domain=-0.5,1.5", "--out", str(map_path),
    )
    out = tmp_path / "corona.json"
    status = run_cli(
        "corona", "--input", str(map_path), "--eta", "0.3", "--root", "0,0",
        "--depth", "6", "--out", str(out),
    )
    assert status == 0
    payload = json.loads(out.read_text())
    assert payload["report"]["passed"]
    assert payload["coronization"]["packing_constant"] <= 50.0
    csv_path = tmp_path / "series.csv"
    fig_path = tmp_path / "series.png"
    assert run_cli(
        "report", "--input", str(out), "--csv", str(csv_path), "--fig", str(fig_path),
        "--out", str(tmp_path / "summary.json"),
    ) == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "tree_j,tree_m,interval_j,interval_m,sample,ratio"
    assert len(lines) > 1
    assert fig_path.exists() and fig_path.stat().st_size > 0


def test_cli_corona_rejects_n1(tmp_path):
    map_path = tmp_path / "map.json"
    run_cli("generate", "--kind", "ilg-k1", "--seed", "3", "--n", "1", "--out", str(map_path))
    status = run_cli("corona", "--input", str(map_path), "--eta", "0.3", "--out", str(tmp_path / "c.json"))
    assert status == 2


def test_cli_malformed_input_is_status_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("verify", "--input", str(bad)) == 2
    missing = tmp_path / "missing.json"
    assert run_cli("verify", "--input", str(missing)) == 2


def test_tolerance_env_scaling(tmp_path, monkeypatch):
    from heisgraph.tolerances import scaled, tolerance_factor

    monkeypatch.setenv("HEIS_ILG_TOL", "2.5")
    assert tolerance_factor() == 2.5
    assert scaled(1e-9) == 2.5e-9
    monkeypatch.setenv("HEIS_ILG_TOL", "-1")
    with pytest.raises(ValueError):
        tolerance_factor()
