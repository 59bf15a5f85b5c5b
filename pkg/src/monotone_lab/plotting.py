"""Figure rendering for scan series, preparation-error histograms, and
drift fits.  Plots are written next to the CSV output when the CLI is run
with --plot; the CSV stays the canonical record.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import CosineFit, PrepErrorResult, ScanSeries


def render_scan(series: ScanSeries, path: str, title: str | None = None) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    # One line per (family, quantity) pair so mixed series stay readable.
    groups: dict[tuple[str, str], list] = {}
    for row in series.rows:
        groups.setdefault((row.family, row.quantity), []).append(row)
    for (family, quantity), rows in groups.items():
        t = [r.realized_t_us for r in rows]
        v = [r.value for r in rows]
        err = [r.stderr for r in rows]
        label = f"{family} {quantity}"
        if any(e > 0 for e in err):
            ax.errorbar(t, v, yerr=err, marker="o", ms=3, lw=1, capsize=2, label=label)
        else:
            ax.plot(t, v, marker="o", ms=3, lw=1, label=label)
    ax.set_xlabel("delay (us, realized)")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_prep_error(result: PrepErrorResult, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.hist(result.per_rep_percent, bins=12, edgecolor="black", alpha=0.8)
    ax.axvline(result.mean_error_percent, color="C3", lw=1.5,
               label=f"mean {result.mean_error_percent:.2f} +/- {result.stderr_percent:.2f} %")
    ax.set_xlabel("preparation error (%)")
    ax.set_ylabel("repetitions")
    ax.set_title(f"{result.family} n={result.n}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_cosine_fit(times_us: Sequence[float], values: Sequence[float], fit: CosineFit, path: str) -> None:
    t = np.asarray(times_us, dtype=float)
    y = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, y, "o", ms=4, label="data")
    tt = np.linspace(t.min(), t.max(), 400)
    ax.plot(tt, fit.amplitude * np.cos(2.0 * np.pi * fit.f_hat_hz * tt * 1e-6), lw=1, label="fit")
    ax.set_xlabel("delay (us)")
    ax.set_ylabel("expectation value")
    ax.set_title(f"f_hat = {fit.f_hat_hz / 1e3:.2f} kHz")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
