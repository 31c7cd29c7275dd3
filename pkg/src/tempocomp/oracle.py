"""Exact digital references for every photonic operation.

Deliberately slow and independent of the engine code path: patches are cut
with explicit loops and every dot product is evaluated with error-free
products followed by ``math.fsum``, i.e. correctly rounded.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """Dekker's product: ``a*b == p + e`` exactly (barring over/underflow)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def dot_digital(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    p, e = _two_prod(a, b)
    return math.fsum(np.concatenate((p, e)).tolist())


def _patches(arr: np.ndarray, k: int, padding: int, stride: int):
    h, w = arr.shape
    padded = np.zeros((h + 2 * padding, w + 2 * padding))
    padded[padding:padding + h, padding:padding + w] = arr
    out_h = (h + 2 * padding - k) // stride + 1
    out_w = (w + 2 * padding - k) // stride + 1
    if k > h + 2 * padding or k > w + 2 * padding or out_h < 1 or out_w < 1:
        raise DimensionError(f"{k}x{k} kernel does not fit a padded {h}x{w} image")
    for y in range(out_h):
        for x in range(out_w):
            yield y, x, padded[y * stride:y * stride + k, x * stride:x * stride + k]


def conv2d_digital(img, spec) -> np.ndarray:
    """Zero-padded 2-D cross-correlation; returns the raw (unscaled) feature map."""
    arr = img.to_array() if hasattr(img, "to_array") else np.asarray(img, dtype=np.float64)
    kernel = np.asarray(spec.kernel, dtype=np.float64)
    k = kernel.shape[0]
    h, w = arr.shape
    out_h = (h + 2 * spec.padding - k) // spec.stride + 1
    out_w = (w + 2 * spec.padding - k) // spec.stride + 1
    out = np.zeros((max(out_h, 0), max(out_w, 0)))
    for y, x, patch in _patches(arr, k, spec.padding, spec.stride):
        out[y, x] = dot_digital(patch, kernel)
    return out


def fc_digital(v, spec) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    weights = np.asarray(spec.weights, dtype=np.float64)
    if weights.shape[1] != v.size:
        raise DimensionError(f"input length {v.size} != FC width {weights.shape[1]}")
    return np.array([dot_digital(v, row) for row in weights])


def detect_digital(img, spec) -> np.ndarray:
    """P x C matrix of patch-classifier dot products, patches in row-major order."""
    arr = img.to_array() if hasattr(img, "to_array") else np.asarray(img, dtype=np.float64)
    h, w = arr.shape
    win, s = spec.window, spec.stride
    if (h - win) % s or (w - win) % s or win > min(h, w):
        raise DimensionError(f"{h}x{w} image is not tiled by window {win} stride {s}")
    rows = []
    for _, _, patch in _patches(arr, win, 0, s):
        rows.append([dot_digital(patch, c) for c in spec.classifiers])
    return np.array(rows)
