"""Figure rendering for suite reports.

Every suite that emits delimited output can also render a small matplotlib
figure next to it.  All rendering goes through the Agg backend so the CLI
works headless.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _new_axes(title, xlabel, ylabel):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, fname):
    fig.tight_layout()
    fig.savefig(fname)
    plt.close(fig)
    return str(fname)


def fig_eigen_trajectories(nodes, lambdas, fname, title="eigenvalue trajectories"):
    fig, ax = _new_axes(title, "t", "lambda_i(t)")
    for i in range(lambdas.shape[0]):
        ax.plot(nodes, lambdas[i], lw=0.8, label=f"lambda_{i + 1}")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, fname)


def fig_min_gap_hist(min_gaps, fname, title="minimum gap distribution"):
    fig, ax = _new_axes(title, "log10 min gap", "replicates")
    ax.hist(np.log10(np.asarray(min_gaps)), bins=30, color="#336699")
    return _save(fig, fname)


def fig_variation_convergence(resolutions, errors_by_label, fname,
                              title="p-variation error vs resolution"):
    fig, ax = _new_axes(title, "n", "|mean V_n - target|")
    for label, errs in errors_by_label.items():
        ax.loglog(resolutions, errs, "o-", label=label)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, fname)


def fig_gap_density(gaps, scale, fname, title="eigenvalue gap vs Rayleigh law"):
    gaps = np.asarray(gaps)
    fig, ax = _new_axes(title, "gap", "density")
    ax.hist(gaps, bins=60, density=True, alpha=0.6, color="#336699",
            label="simulated")
    x = np.linspace(0, gaps.max(), 400)
    ax.plot(x, x / scale**2 * np.exp(-(x**2) / (2 * scale**2)), "r-",
            label=f"Rayleigh(scale={scale:g})")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, fname)


def fig_cdf_overlay(a, b, labels, fname, title="empirical CDF overlay"):
    fig, ax = _new_axes(title, "x", "F(x)")
    for sample, label in zip((a, b), labels):
        s = np.sort(np.asarray(sample))
        ax.step(s, np.arange(1, s.size + 1) / s.size, where="post", label=label)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, fname)


def fig_young_discrepancy(resolutions, discrepancies, fname,
                          title="Skorohod-residual route discrepancy"):
    fig, ax = _new_axes(title, "n", "max |Y_extract - Y_young|")
    disc = np.asarray(discrepancies)
    for i in range(disc.shape[1]):
        ax.loglog(resolutions, disc[:, i], "o-", label=f"i={i + 1}")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, fname)
