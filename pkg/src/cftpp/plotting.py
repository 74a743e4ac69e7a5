"""Optional figures rendered from a scenario summary (the CSV files remain the contract)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {"low": "tab:red", "mid": "tab:green", "high": "tab:blue"}


def plot_summary(summary, out_dir, title: str = "") -> list[Path]:
    """Write ``trajectories.png`` and ``relative_change.png``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for i, g in enumerate(summary.groups):
        color = _COLORS.get(g.name, f"C{i}")
        ax.plot(g.grid, g.mean_factual_curve, color=color, ls="--", lw=1)
        ax.plot(g.grid, g.mean_cf_curve, color=color, label=f"{g.name} [{g.count_range[0]}, {g.count_range[1]}]")
        ax.fill_between(g.grid, g.lo, g.hi, color=color, alpha=0.2, lw=0)
    ax.set_xlabel("t")
    ax.set_ylabel("mean count (dashed: observed)")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    paths.append(out / "trajectories.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3))
    for i, g in enumerate(summary.groups):
        ax.plot(g.grid, 100 * g.rel_diff_curve, color=_COLORS.get(g.name, f"C{i}"), label=g.name)
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("relative difference (%)")
    ax.legend(frameon=False)
    fig.tight_layout()
    paths.append(out / "relative_change.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)
    return paths
