"""Figure rendering for report series.

Each series a report can emit is also renderable as a PNG line plot written
next to its CSV export; plotting stays out of the core pipeline and is only
touched by the CLI `plot` command.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .runner import available_series, emit_series, series_csv

__all__ = ["render_series", "export_figures"]

_LABELS = {
    "norms": "||T^n x||",
    "step_norms": "||T^{n+1} x - T^n x||",
    "tau": "||T^n x|| / n",
    "halfspace": "f(T^n 0)",
    "cosmic_defect": "||d_2n - d_n||",
}


def render_series(report: dict, name: str, out_png: str | Path) -> Path:
    rows = emit_series(report, name)
    ns = [k for k, _ in rows]
    vals = [v for _, v in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    marker = "o" if len(ns) <= 32 else None
    ax.plot(ns, vals, lw=1.2, marker=marker, ms=3.5)
    ax.set_xlabel("n")
    ax.set_ylabel(_LABELS.get(name, name))
    ax.set_title(name)
    ax.grid(alpha=0.3)
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_png


def export_figures(report: dict, out_dir: str | Path, names=None) -> list[Path]:
    """Write <series>.csv and <series>.png for each requested series."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name in names or available_series(report):
        csv_path = out_dir / f"{name}.csv"
        csv_path.write_text(series_csv(report, name), encoding="utf-8")
        written.append(csv_path)
        written.append(render_series(report, name, out_dir / f"{name}.png"))
    return written
