"""Matplotlib renderings of selections and comparison sweeps.

Figures are written straight to files with the Agg backend; nothing here is
needed for the numeric outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CLASS_COLORS = ("black", "red", "tab:blue", "tab:green")


def _save(fig, path) -> None:
    # no timestamp/version metadata so reruns give identical files
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)


def plot_selection(data, result, path, columns=(0, 1)) -> None:
    """Data by class (left) and the chosen validation rows as triangles (right)."""
    if data.n_features < 2:
        columns = (0, 0)
    i, j = columns
    x, y = data.features[:, i], data.features[:, j]
    chosen = np.isin(data.row_ids, np.asarray(result.validation_ids))
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.5), sharex=True, sharey=True)
    for k, c in enumerate(data.classes):
        color = CLASS_COLORS[k % len(CLASS_COLORS)]
        mask = data.labels == c
        left.scatter(x[mask], y[mask], s=14, color=color, label=f"class {c}")
        right.scatter(x[mask & ~chosen], y[mask & ~chosen], s=10, color=color, alpha=0.25)
        right.scatter(x[mask & chosen], y[mask & chosen], s=50, marker="^", color=color,
                      edgecolors="k", linewidths=0.5, label=f"selected, class {c}")
    for ax in (left, right):
        ax.set_xlabel(data.column_names[i])
        ax.legend(fontsize=8, loc="best")
    left.set_ylabel(data.column_names[j])
    left.set_title("dataset")
    right.set_title(f"{result.method} selection, N_v = {result.nv}")
    _save(fig, path)


def _nan(values):
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def plot_sweep(rows, path) -> None:
    """Error rate and sensitivity against validation ratio, with random-split CIs."""
    ratio = _nan([r["ratio"] for r in rows])
    offset = 0.006
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5), sharex=True)
    for ax, metric, title in ((axes[0], "eps", "error rate"), (axes[1], "tau", "sensitivity")):
        ref = _nan([r[f"{metric}_ref"] for r in rows])
        ax.axhline(ref[0], color="black", lw=1.5, label="reference (LOO, full data)")
        for key, color, shift, label in ((f"{metric}_rand", "tab:blue", -offset, "95% CI random validation"),
                                         (f"{metric}_randloo", "tab:green", offset, "95% CI random LOO-learning")):
            lo = _nan([r[f"{key}_lo"] for r in rows])
            hi = _nan([r[f"{key}_hi"] for r in rows])
            ax.vlines(ratio + shift, lo, hi, color=color, lw=2, label=label)
            ax.plot(ratio + shift, lo, "_", color=color, ms=8)
            ax.plot(ratio + shift, hi, "_", color=color, ms=8)
        ax.plot(ratio, _nan([r[f"{metric}_spnn_val"] for r in rows]), "o", color="red",
                label="SPNN validation")
        ax.plot(ratio, _nan([r[f"{metric}_spnn_lootrain"] for r in rows]), ":", color="red",
                label="SPNN LOO-learning")
        ax.set_xlabel("N_v / N")
        ax.set_title(title)
        ax.set_ylim(-0.05, 1.05)
    axes[0].legend(fontsize=7, loc="upper left")
    _save(fig, path)
