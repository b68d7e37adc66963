"""Figure rendering for the report path.

Every subcommand that writes a table also renders a matplotlib figure next to
it; formats come from the run configuration (svg by default, so the output
stays inspectable as plain XML).
"""

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_figure(fig, outdir, stem: str, formats) -> list:
    """Atomically write one figure in each requested format; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        target = outdir / f"{stem}.{fmt}"
        fd, tmp = tempfile.mkstemp(dir=outdir, prefix=stem, suffix=f".tmp.{fmt}")
        os.close(fd)
        try:
            fig.savefig(tmp, format=fmt, dpi=150)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        written.append(target)
    plt.close(fig)
    return written


def line_figure(x, series: dict, xlabel: str, ylabel: str, logx=False, logy=False,
                title: str = ""):
    """One axis, one line per named series; nonpositive points are masked on log axes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        xs = np.asarray(x, dtype=float)
        ys = np.asarray(y, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            keep &= xs > 0
        if logy:
            keep &= ys > 0
        ax.plot(xs[keep], ys[keep], linewidth=1.5, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def heatmap_figure(x_values, y_values, grid, xlabel: str, ylabel: str, clabel: str,
                   title: str = ""):
    """Heat map of grid[i, j] over x_values[i] (horizontal) and y_values[j]."""
    x = np.asarray(x_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    z = np.asarray(grid, dtype=float)

    def edges(v):
        if v.size == 1:
            half = 0.5 * (abs(v[0]) if v[0] != 0 else 1.0)
            return np.array([v[0] - half, v[0] + half])
        mid = 0.5 * (v[1:] + v[:-1])
        return np.concatenate(([v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]))

    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(edges(x), edges(y), z.T, shading="flat", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=clabel)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def evolve_figure(t, log_norm, p2):
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    axes[0].plot(t, log_norm, linewidth=1.5)
    axes[0].set_ylabel(r"$\log \mathcal{N}(t)$")
    axes[0].grid(alpha=0.3)
    axes[1].plot(t, p2, linewidth=1.5)
    axes[1].set_ylabel(r"$\langle p^2 \rangle$")
    axes[1].set_xlabel("kick number $t$")
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    return fig


def otoc_figure(arrays: dict):
    t = arrays["t"]
    series = {
        "C": arrays["c"],
        "C1": arrays["c1"],
        "C2": arrays["c2"],
        "|Re C3|": np.abs(arrays["re_c3"]),
    }
    return line_figure(t, series, "kick number $t$", "correlator", logx=True, logy=True)


def trace_figure(times, p2_forward, p2_backward, ratio, t_n):
    fig, axes = plt.subplots(2, 1, figsize=(6, 6))
    axes[0].semilogy(times, p2_forward, linewidth=1.5, label="forward")
    axes[0].semilogy(2 * t_n - times, p2_backward, linewidth=1.5, label="reversal")
    axes[0].axvline(t_n, color="green", linestyle="--", linewidth=1.0)
    axes[0].set_xlabel("kick number (doubled axis)")
    axes[0].set_ylabel(r"$\langle p^2 \rangle$")
    axes[0].legend(fontsize=8)
    axes[0].grid(alpha=0.3)
    axes[1].semilogy(times, ratio, linewidth=1.5)
    axes[1].axhline(1.0, color="red", linewidth=1.0)
    axes[1].set_xlabel("kick number $t_j$")
    axes[1].set_ylabel("energy ratio $\\mathcal{R}$")
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    return fig
