"""SVG risk curves (lines = theory, markers = Monte Carlo) plus a gnuplot data file."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import InvalidSpecError  # noqa: E402
from .sweep import SweepTable  # noqa: E402

AXIS_LABELS = {
    "overparam_ratio": "over-parametrization ratio n/m",
    "lambda": "ridge parameter lambda",
    "q_rows": "row correlation q_y",
}
COLORS = {"gls": "tab:blue", "ridge": "tab:green", "ls": "tab:red"}


@dataclass(frozen=True)
class PlotArtifact:
    svg_path: Path
    data_path: Path
    line_series: int
    marker_series: int
    asymptote: Optional[float]


def _column(table: SweepTable, name: str) -> list:
    out = []
    for row in table.rows:
        v = row.get(name)
        out.append(float("nan") if v is None else float(v))
    return out


def write_gnuplot_data(table: SweepTable, path) -> None:
    cols = ["axis_value"]
    for r in table.regimes:
        cols += [f"{r}_risk_theory", f"{r}_risk_mc", f"{r}_risk_se"]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(cols) + "\n")
        for row in table.rows:
            vals = []
            for c in cols:
                v = row.get(c)
                vals.append("NaN" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".17g"))
            fh.write(" ".join(vals) + "\n")


def emit_plot(table: SweepTable, svg_path, style: Optional[dict] = None) -> PlotArtifact:
    """Render ``table`` to ``svg_path``; the gnuplot file sits next to it with suffix ``.dat``."""
    if not table.rows:
        raise InvalidSpecError("cannot plot an empty table")
    style = dict(style or {})
    svg_path = Path(svg_path)
    data_path = svg_path.with_suffix(".dat")
    x = _column(table, "axis_value")

    plt.rcParams["svg.hashsalt"] = "regrisk"
    fig, ax = plt.subplots(figsize=style.get("figsize", (7.0, 4.5)))
    lines = markers = 0
    for r in table.regimes:
        color = COLORS.get(r, None)
        theory = _column(table, f"{r}_risk_theory")
        if any(not math.isnan(v) for v in theory):
            ax.plot(x, theory, "-", color=color, label=f"{r} (theory)")
            lines += 1
        mc = _column(table, f"{r}_risk_mc")
        if any(not math.isnan(v) for v in mc):
            se = [0.0 if math.isnan(v) else v for v in _column(table, f"{r}_risk_se")]
            ax.errorbar(x, mc, yerr=se, fmt="o", color=color, markersize=4, capsize=2, label=f"{r} (simulation)")
            markers += 1

    asymptote = None
    if table.axis == "overparam_ratio" and min(x) < 1.0 < max(x):
        asymptote = 1.0
        ax.axvline(1.0, color="gray", linestyle="--", linewidth=0.8)
    if style.get("logx", table.axis == "overparam_ratio"):
        ax.set_xscale("log")
    if style.get("ymax") is not None:
        ax.set_ylim(top=style["ymax"])
    ax.set_ylim(bottom=0)
    ax.set_xlabel(AXIS_LABELS.get(table.axis, table.axis))
    ax.set_ylabel("prediction risk")
    if lines or markers:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)

    write_gnuplot_data(table, data_path)
    return PlotArtifact(svg_path, data_path, lines, markers, asymptote)
