"""Matplotlib figure rendering for the report paths.

Imported lazily by the CLI so that plain computations never pay the
matplotlib import cost.  All figures go straight to files via Agg.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .random_series import mu_cdf


def save_path_figure(points, target: str | Path, label: str = "") -> None:
    """The polygonal path in the complex plane."""
    xs = [pt.value.real for pt in points]
    ys = [pt.value.imag for pt in points]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(xs, ys, lw=0.4, color="black")
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if label:
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)


def save_series_figure(grid, paths, target: str | Path) -> None:
    """A handful of sampled series paths, real and imaginary parts."""
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    show = min(paths.shape[0], 8)
    for i in range(show):
        axes[0].plot(grid, paths[i].real, lw=0.8)
        axes[1].plot(grid, paths[i].imag, lw=0.8)
    axes[0].set_ylabel("Re")
    axes[1].set_ylabel("Im")
    axes[1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)


def save_moment_figure(labels, observed, reference, target: str | Path) -> None:
    """Observed moments against their references, side by side."""
    idx = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(idx - 0.2, observed, width=0.4, label="observed")
    ax.bar(idx + 0.2, reference, width=0.4, label="reference")
    ax.set_xticks(idx)
    ax.set_xticklabels([str(l) for l in labels])
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)


def save_cdf_figure(samples, target: str | Path) -> None:
    """Empirical CDF of the complete sums against the limit-law CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    ecdf = np.arange(1, xs.size + 1) / xs.size
    grid = np.linspace(-2.1, 2.1, 800)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(xs, ecdf, where="post", lw=1.0, label="empirical")
    ax.plot(grid, mu_cdf(grid), lw=1.0, ls="--", label="limit law")
    ax.set_xlabel("value")
    ax.set_ylabel("CDF")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)


def save_ratio_histogram(ratios, cap: float, target: str | Path, label: str) -> None:
    """Distribution of a normalized ratio with its pinned cap marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(ratios, bins=40, color="steelblue")
    ax.axvline(cap, color="crimson", ls="--", label=f"cap {cap:g}")
    ax.set_xlabel(label)
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)


def save_decay_figure(h_values, gaps, fitted_exponent: float, target: str | Path) -> None:
    """Log-log truncation decay with the fitted slope."""
    hs = np.asarray(h_values, dtype=float)
    ds = np.asarray(gaps, dtype=float)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.loglog(hs, ds, "o-", label="measured gap")
    anchor = ds[0] / hs[0] ** fitted_exponent
    ax.loglog(hs, anchor * hs ** fitted_exponent, "--",
              label=f"fit slope {fitted_exponent:.3f}")
    ax.set_xlabel("H")
    ax.set_ylabel("mean |gap|")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=150)
    plt.close(fig)
