"""Static report figures. Rendered off-screen with no timestamp metadata so the
PNG bytes depend only on the data."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def edge_maps(image, reference, photonic, path, correlation: float | None = None) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
    for ax, arr, title in zip(axes, (image, reference, photonic),
                              ("input", "digital", "photonic")):
        ax.imshow(arr, cmap="gray")
        ax.set_title(title)
        ax.axis("off")
    if correlation is not None:
        fig.suptitle(f"Pearson r = {correlation:.5f}")
    fig.tight_layout()
    _save(fig, path)


def confusion(counts, path, title: str = "") -> None:
    counts = np.asarray(counts)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.imshow(counts, cmap="Blues")
    for (r, c), v in np.ndenumerate(counts):
        if v:
            ax.text(c, r, str(v), ha="center", va="center", fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_xticks(range(counts.shape[1]))
    ax.set_yticks(range(counts.shape[0]))
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def decision_matrix(matrix, labels, thresholds, path) -> None:
    matrix = np.asarray(matrix)
    fig, axes = plt.subplots(len(labels), 1, figsize=(7, 1.6 * len(labels)), sharex=True)
    axes = np.atleast_1d(axes)
    x = np.arange(1, matrix.shape[0] + 1)
    for ax, col, label, thr in zip(axes, matrix.T, labels, thresholds):
        ax.bar(x, col, color=np.where(col > thr, "tab:red", "tab:gray"))
        ax.axhline(thr, color="k", lw=0.8, ls="--")
        ax.set_ylabel(f"digit {label}")
    axes[-1].set_xlabel("patch index")
    axes[-1].set_xticks(x)
    fig.tight_layout()
    _save(fig, path)


def class_scores(rows, labels, path, title: str = "") -> None:
    rows = np.atleast_2d(rows)
    fig, ax = plt.subplots(figsize=(6, 3))
    width = 0.8 / rows.shape[0]
    for k, (row, label) in enumerate(zip(rows, labels)):
        ax.bar(np.arange(rows.shape[1]) + k * width, row, width, label=f"digit {label}")
    ax.set_xticks(np.arange(rows.shape[1]) + 0.4 - width / 2)
    ax.set_xticklabels(range(rows.shape[1]))
    ax.set_xlabel("class")
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def waveforms(times, series: dict, path) -> None:
    fig, axes = plt.subplots(len(series), 1, figsize=(7, 1.5 * len(series)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, (name, y) in zip(axes, series.items()):
        ax.plot(times * 1e9, y, lw=0.8)
        ax.set_ylabel(name)
    axes[-1].set_xlabel("time (ns)")
    fig.tight_layout()
    _save(fig, path)
