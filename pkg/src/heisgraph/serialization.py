"""JSON file formats and deterministic serialization.

Formats (all JSON, floats in the shortest round-trip decimal form):

- point:          flat array [x_1, ..., x_{2n}, t]
- sampled map:    {"k", "n", "domain": [[...]], "values": [[...]]}
- grid function:  {"k", "n", "origin": [...], "spacing": h, "shape": [...],
                   "values": [[...]]}   (nodes flattened row-major)
- jet:            {"points": [[...]], "f": [...], "grad": [[...]]}
- tame constants: {"per_component": [...], "quadratic": L}
- coronization:   {"root": {"j", "m"}, "depth", "bad": [[j, m]],
                   "trees": [{"top": [j, m], "members": [[j, m]],
                              "slope": [...], "psi_breaks": [...],
                              "psi_vals": [[...]],
                              "corrections": [{"S": [j, m], "c": c}],
                              "t_table": [[node, value]]}],
                   "packing_constant": C}

Identical inputs produce byte-identical files: keys are sorted and floats use
Python's shortest round-trip repr.
"""
from __future__ import annotations

import json

import numpy as np

from .corona import Coronization, DyadicInterval, Tree, TreeApprox
from .heisenberg import HeisPoint, SampledMap, SubgroupSplit
from .tame import GridFunction, TameConstants
from .whitney import JetData


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def heis_point_to_obj(p: HeisPoint) -> list:
    return [float(v) for v in p.coords()]


def heis_point_from_obj(obj) -> HeisPoint:
    return HeisPoint.from_coords(np.asarray(obj, dtype=float))


def sampled_map_to_obj(sm: SampledMap) -> dict:
    return {
        "k": sm.split.k,
        "n": sm.split.n,
        "domain": sm.domain.tolist(),
        "values": sm.values.tolist(),
    }


def sampled_map_from_obj(obj) -> SampledMap:
    split = SubgroupSplit(int(obj["n"]), int(obj["k"]))
    return SampledMap(split, np.asarray(obj["domain"], dtype=float), np.asarray(obj["values"], dtype=float))


def grid_function_to_obj(gf: GridFunction) -> dict:
    flat = gf.values.reshape(-1, gf.split.w_dim)
    return {
        "k": gf.split.k,
        "n": gf.split.n,
        "origin": gf.origin.tolist(),
        "spacing": gf.spacing,
        "shape": list(gf.shape),
        "values": flat.tolist(),
    }


def grid_function_from_obj(obj) -> GridFunction:
    split = SubgroupSplit(int(obj["n"]), int(obj["k"]))
    shape = tuple(int(s) for s in obj["shape"])
    values = np.asarray(obj["values"], dtype=float).reshape(*shape, split.w_dim)
    return GridFunction(split, np.asarray(obj["origin"], dtype=float), float(obj["spacing"]), values)


def jet_to_obj(jet: JetData) -> dict:
    return {
        "points": jet.points.tolist(),
        "f": jet.f_values.tolist(),
        "grad": jet.gradients.tolist(),
    }


def jet_from_obj(obj) -> JetData:
    return JetData(
        np.asarray(obj["points"], dtype=float),
        np.asarray(obj["f"], dtype=float),
        np.asarray(obj["grad"], dtype=float),
    )


def tame_constants_to_obj(tc: TameConstants) -> dict:
    return {"per_component": tc.per_component.tolist(), "quadratic": tc.quadratic}


def tame_constants_from_obj(obj) -> TameConstants:
    return TameConstants(np.asarray(obj["per_component"], dtype=float), float(obj["quadratic"]))


def _interval_pair(q: DyadicInterval) -> list:
    return [q.j, q.m]


def coronization_to_obj(coron: Coronization, approxes: list[TreeApprox]) -> dict:
    trees = []
    for approx in approxes:
        tree: Tree = approx.tree
        trees.append(
            {
                "top": _interval_pair(tree.top),
                "members": sorted(_interval_pair(q) for q in tree.members),
                "slope": approx.fit.slope.tolist(),
                "psi_breaks": approx.fit.remainder.breaks.tolist(),
                "psi_vals": approx.fit.remainder.values.tolist(),
                "corrections": [
                    {"S": _interval_pair(s), "c": c} for s, c in approx.corrections
                ],
                "t_table": [
                    [float(node), float(val)]
                    for node, val in zip(approx.nodes, approx.cumulative)
                ],
            }
        )
    return {
        "root": {"j": coron.root.j, "m": coron.root.m},
        "depth": coron.depth,
        "bad": sorted(_interval_pair(q) for q in coron.bad),
        "trees": trees,
        "packing_constant": coron.packing_constant,
        "flags": list(coron.flags),
    }


def report_series_to_csv_rows(report: dict) -> list[str]:
    """Flatten per-tree approximation series into CSV rows."""
    rows = ["tree_j,tree_m,interval_j,interval_m,sample,ratio"]
    for tree_report in report.get("trees", []):
        top = tree_report.get("top")
        for entry in tree_report.get("series", []):
            j, m = entry["interval"]
            rows.append(
                f"{top[0]},{top[1]},{j},{m},{entry['sample']!r},{entry['ratio']!r}"
            )
    return rows
