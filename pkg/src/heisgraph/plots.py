"""Figure rendering for corona reports.

The report path writes, next to the delimited series, one PNG with two
panels: the tree layout over the dyadic grid (tops, members, bad intervals)
and the per-interval approximation ratios against interval scale.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def render_corona_report(payload: dict, path: str):
    coron = payload.get("coronization", {})
    report = payload.get("report", {})
    fig, (ax_layout, ax_ratio) = plt.subplots(
        2, 1, figsize=(8.0, 6.0), height_ratios=[2, 1], constrained_layout=True
    )

    cmap = plt.get_cmap("tab20")
    for t_idx, tree in enumerate(coron.get("trees", [])):
        color = cmap(t_idx % 20)
        for j, m in tree["members"]:
            left, length = m * 2.0**-j, 2.0**-j
            ax_layout.plot([left, left + length], [-j, -j], color=color, lw=2.5, solid_capstyle="butt")
        j, m = tree["top"]
        ax_layout.plot(
            [m * 2.0**-j, (m + 1) * 2.0**-j], [-j, -j], color=color, lw=5.0, alpha=0.6
        )
    for j, m in coron.get("bad", []):
        left, length = m * 2.0**-j, 2.0**-j
        ax_layout.plot([left, left + length], [-j, -j], color="crimson", lw=2.5)
    ax_layout.set_ylabel("-level")
    ax_layout.set_title(
        f"coronization: {len(coron.get('trees', []))} trees, "
        f"{len(coron.get('bad', []))} bad intervals, "
        f"packing C = {coron.get('packing_constant', float('nan')):.2f}"
    )

    for tree_report in report.get("trees", []):
        xs = [2.0 ** -entry["interval"][0] for entry in tree_report.get("series", [])]
        ys = [entry["ratio"] for entry in tree_report.get("series", [])]
        ax_ratio.plot(xs, ys, ".", ms=3, alpha=0.5)
    ax_ratio.axhline(1.0, color="k", lw=0.8, ls="--")
    ax_ratio.set_xscale("log", base=2)
    ax_ratio.set_xlabel("|Q|")
    ax_ratio.set_ylabel("d / (eta |Q|)")
    eta = report.get("eta")
    if eta is not None:
        ax_ratio.set_title(f"approximation ratios, eta = {eta}")

    fig.savefig(path, dpi=130)
    plt.close(fig)
