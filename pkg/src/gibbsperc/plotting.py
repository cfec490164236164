"""Figures written next to the CSV output (opt-in with ``--plot``)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def phase_diagram(rows, path):
    """Both boundary curves against log intensity; beta_minus gets its own panel (its scale is tiny)."""
    lam = np.array([r["lambda"] for r in rows], dtype=float)
    bm = np.array([np.nan if r["beta_minus"] is None else r["beta_minus"] for r in rows], dtype=float)
    bp = np.array([np.nan if r["beta_plus"] is None else r["beta_plus"] for r in rows], dtype=float)
    fig, (top, bot) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    if np.isfinite(bp).any():
        ceiling = np.nanmax(bp) * 1.05
        top.plot(lam, bp, color="tab:red", label=r"$\beta^+(\lambda)$")
        top.fill_between(lam, bp, ceiling, color="tab:red", alpha=0.12, label="percolating")
        top.legend(loc="upper right", fontsize=8)
    top.set_ylabel(r"$\beta$")
    top.set_ylim(bottom=0)
    if np.isfinite(bm).any():
        bot.plot(lam, bm, color="tab:blue", label=r"$\beta^-(\lambda)$")
        bot.fill_between(lam, 0, bm, where=np.isfinite(bm), color="tab:blue", alpha=0.15,
                         label="non-percolating")
        bot.legend(loc="upper right", fontsize=8)
    bot.set_ylabel(r"$\beta$")
    bot.set_ylim(bottom=0)
    bot.set_xscale("log")
    bot.set_xlabel(r"$\lambda$")
    return _save(fig, path)


def theta(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for beta in sorted({r["beta"] for r in rows}):
        sub = sorted((r for r in rows if r["beta"] == beta), key=lambda r: r["lambda"])
        x = [r["lambda"] for r in sub]
        y = np.array([r["theta_hat"] for r in sub])
        lo = y - np.array([r["ci_lo"] for r in sub])
        hi = np.array([r["ci_hi"] for r in sub]) - y
        ax.errorbar(x, y, yerr=[lo, hi], marker="o", capsize=3, label=rf"$\beta={beta:g}$")
    ax.set_xscale("log")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel(r"$\hat\theta$ (crossing)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    return _save(fig, path)


def contour_frequencies(n, freq, envelope, path, title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    f = np.asarray(freq, dtype=float)
    ax.semilogy(n, np.where(f > 0, f, np.nan), "o", label="empirical")
    env = np.asarray(envelope, dtype=float)
    if np.isfinite(env).any():
        ax.semilogy(n, env, "-", label="envelope")
    ax.set_xlabel("contour length n")
    ax.set_ylabel("frequency")
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=8)
    return _save(fig, path)


def traces(sweeps, density, energy, path):
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(sweeps, density)
    a1.set_ylabel("density")
    a2.plot(sweeps, energy, color="tab:orange")
    a2.set_ylabel("energy")
    a2.set_xlabel("sweep")
    return _save(fig, path)


def gw(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.arange(len(rows))
    ax.bar(x - 0.2, [r["mean_total_size"] for r in rows], width=0.4, label="mean total progeny")
    ax.bar(x + 0.2, [r["bound_1_over_eps"] for r in rows], width=0.4, label=r"$1/(1-\mathrm{mean})$")
    ax.set_xticks(x, [f"({r['lambda']:g}, {r['beta']:g})" for r in rows], rotation=30, fontsize=7)
    ax.legend(fontsize=8)
    return _save(fig, path)
