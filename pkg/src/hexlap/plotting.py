"""Figures for the report path. Every function writes one PNG and returns its path."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def spectrum(eigs, oracle, path, kappa=(-1, -1 / 3, 0, 1 / 3, 1)) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bins = np.linspace(-1.1, 1.1, 89)
    ax.hist(np.asarray(eigs), bins=bins, alpha=0.6, label="assembled H")
    if oracle is not None:
        ax.hist(np.asarray(oracle), bins=bins, histtype="step", color="k", label="symbol oracle")
    for k in kappa:
        ax.axvline(k, color="r", lw=0.6, ls=":")
    ax.set_xlabel("energy")
    ax.set_ylabel("count")
    ax.legend(fontsize=8)
    return _save(fig, path)


def resolvent_curves(curves: Sequence, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in curves:
        ax.loglog(c.rhos, c.norms, "o-", label=f"lambda={c.lam:.3f} slope={c.slope:.2f}")
    ax.invert_xaxis()
    ax.set_xlabel("rho")
    ax.set_ylabel("weighted resolvent norm")
    ax.legend(fontsize=7)
    return _save(fig, path)


def propagation(rec, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(rec.checkpoints, rec.partials)
    ax.axvline(rec.window, color="r", ls=":", label="judged window")
    ax.axvspan(0.75 * rec.window, rec.window, color="0.9")
    ax.set_xlabel("T")
    ax.set_ylabel("partial integral")
    ax.legend(fontsize=8)
    return _save(fig, path)


def decay_trace(trace, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(trace.times, np.maximum(trace.values, 1e-16))
    ax.set_xlabel("t")
    ax.set_ylabel(f"|psi(t) at {trace.site}|")
    return _save(fig, path)


def degeneration(points, path) -> Path:
    d, c = zip(*points)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(d, c, "o-")
    ax.set_xlabel("distance to threshold")
    ax.set_ylabel("c_symbol")
    return _save(fig, path)


def hypothesis_trends(reports: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, r in reports.items():
        if len(r.trend) and np.max(r.trend) > 0:
            ax.semilogy(range(1, len(r.trend) + 1), np.maximum(r.trend, 1e-300), "o-", label=name)
    ax.set_xlabel("annulus")
    ax.set_ylabel("annulus maximum")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    return _save(fig, path)
