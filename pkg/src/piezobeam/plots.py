"""Figure rendering for the report path.

All figures are written as SVG next to the delimited output.  The SVG
hash salt and date metadata are pinned so reruns produce stable files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "piezobeam"

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["energy_figure", "scan_figure", "spectrum_figure"]

_SAVE_KW = dict(format="svg", metadata={"Date": None}, bbox_inches="tight")


def energy_figure(times, totals, path, fit=None) -> None:
    """Total energy against time on a log scale, with the fitted decay
    model overlaid when one is available."""
    times = np.asarray(times)
    totals = np.asarray(totals)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    pos = totals > 0.0
    if np.any(pos):
        ax.semilogy(times[pos], totals[pos], color="tab:blue", lw=1.2,
                    label="energy")
    else:
        ax.plot(times, totals, color="tab:blue", lw=1.2, label="energy")
    if fit is not None:
        lo, hi = fit.window
        tt = np.linspace(lo, hi, 128)
        model = fit.model
        if hasattr(model, "energy_rate"):
            ax.semilogy(tt, model.amplitude * np.exp(-model.energy_rate * tt),
                        "k--", lw=1.0,
                        label=f"fit: rate {model.energy_rate:.3g} (energy)")
        else:
            ax.semilogy(tt, model.amplitude * tt ** (-model.order),
                        "k--", lw=1.0, label=f"fit: order {model.order:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def scan_figure(lambdas, norms, path, tail_slope=None) -> None:
    """Log-log resolvent norms plus the quadratically rescaled curve."""
    lambdas = np.asarray(lambdas)
    norms = np.asarray(norms)
    finite = np.isfinite(norms)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(lambdas[finite], norms[finite], "o-", ms=2.5, lw=0.9,
              color="tab:blue", label=r"resolvent norm")
    ax.loglog(lambdas[finite], norms[finite] / lambdas[finite] ** 2, "s-",
              ms=2.5, lw=0.9, color="tab:orange", label=r"norm / lambda^2")
    if tail_slope is not None and np.isfinite(tail_slope):
        anchor = norms[finite][-1] / lambdas[finite][-1] ** tail_slope
        tt = np.geomspace(lambdas[-1] / 10.0, lambdas[-1], 32)
        ax.loglog(tt, anchor * tt ** tail_slope, "k--", lw=1.0,
                  label=f"tail slope {tail_slope:.2f}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("operator norm")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def spectrum_figure(eigs, path) -> None:
    """Eigenvalues in the complex plane with the imaginary axis marked."""
    eigs = np.asarray(eigs)
    fig, ax = plt.subplots(figsize=(5.0, 4.5))
    ax.plot(eigs.real, eigs.imag, ".", ms=3.0, color="tab:blue")
    ax.axvline(0.0, color="k", lw=0.8, alpha=0.6)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.grid(True, alpha=0.3)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
