"""Figure rendering for CLI reports.

Figures are written next to the delimited output files. Matplotlib runs on
the Agg backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 3.7),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _new_axes():
    plt.rcParams.update(_RC)
    fig, ax = plt.subplots()
    return fig, ax


def save_sweep_figures(rows: list[dict], out_csv: str | Path) -> list[Path]:
    """Render communication and round counts against N, next to the CSV.

    rows: per-trial dicts with keys n, bytes, rounds, error_ratio.
    Returns the written figure paths.
    """
    base = Path(out_csv)
    ns = sorted({r["n"] for r in rows})
    mean_bytes = [
        sum(r["bytes"] for r in rows if r["n"] == n) / max(1, sum(1 for r in rows if r["n"] == n))
        for n in ns
    ]
    mean_rounds = [
        sum(r["rounds"] for r in rows if r["n"] == n) / max(1, sum(1 for r in rows if r["n"] == n))
        for n in ns
    ]
    paths = []

    fig, ax = _new_axes()
    ax.plot(ns, mean_bytes, marker="o")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("vector length N")
    ax.set_ylabel("mean bytes per run")
    ax.set_title("Communication vs N")
    p = base.with_suffix("").with_name(base.stem + "_bytes.png")
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    fig, ax = _new_axes()
    ax.plot(ns, mean_rounds, marker="s", color="tab:orange")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("vector length N")
    ax.set_ylabel("mean rounds per run")
    ax.set_title("Rounds vs N")
    p = base.with_suffix("").with_name(base.stem + "_rounds.png")
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)
    return paths


def save_privacy_figure(reports: list[dict], out_json: str | Path, threshold: float = 0.05) -> Path:
    """Bar chart of per-instance TV distances against the pass threshold."""
    base = Path(out_json)
    labels = [str(r.get("instance", i)) for i, r in enumerate(reports)]
    tvs = [r["tv"] for r in reports]
    fig, ax = _new_axes()
    colors = ["tab:green" if r.get("pass") else "tab:red" for r in reports]
    ax.bar(range(len(tvs)), tvs, color=colors)
    ax.axhline(threshold, color="black", linestyle="--", linewidth=1, label=f"threshold {threshold}")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("empirical TV distance")
    ax.set_title("Real vs simulated output distributions")
    ax.legend()
    p = base.with_suffix("").with_name(base.stem + "_tv.png")
    fig.savefig(p)
    plt.close(fig)
    return p
