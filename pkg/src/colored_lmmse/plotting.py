"""Matplotlib figures for MSE sweeps and scaling runs, written straight to files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "block": dict(color="k", marker="s", linestyle="-"),
    "fg_colored": dict(color="tab:blue", marker="o", linestyle="--"),
    "fg_white": dict(color="tab:red", marker="^", linestyle="-."),
}


def _by_filter(records):
    groups = {}
    for rec in records:
        groups.setdefault(rec.filter, []).append(rec)
    return groups


def plot_mse(records, path, title=None):
    """MSE (markers) and mean posterior variance (thin line) against Es/N0."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for name, recs in _by_filter(records).items():
        recs = sorted(recs, key=lambda r: r.snr_db)
        snr = [r.snr_db for r in recs]
        style = STYLE.get(name, {})
        ax.semilogy(snr, [r.mse for r in recs], label=name, **style)
        ax.semilogy(snr, [r.mean_post_var for r in recs], color=style.get("color"),
                    linewidth=0.6, alpha=0.6)
    ax.set_xlabel(r"$E_s/N_0$ [dB]")
    ax.set_ylabel("MSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_scaling(records, path, title=None):
    """Median wall time per run against block length, log-log."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for name, recs in _by_filter(records).items():
        recs = sorted(recs, key=lambda r: r.n)
        ax.loglog([r.n for r in recs], [r.wall_ms for r in recs], label=name,
                  **STYLE.get(name, {}))
    ax.set_xlabel("block length N")
    ax.set_ylabel("wall time [ms]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
