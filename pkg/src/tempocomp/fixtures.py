"""Deterministic synthetic inputs standing in for images that are not distributed."""

from __future__ import annotations

import numpy as np

from .encoding import ImageTensor, normalize_pixels


def synthetic_flower(size: int = 92) -> ImageTensor:
    """Five-petal flower with a disc centre, a stem and a shaded background."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx = 0.42 * size, 0.5 * size
    dy, dx = yy - cy, xx - cx
    r = np.hypot(dy, dx)
    theta = np.arctan2(dy, dx)
    petal_r = 0.34 * size * (0.55 + 0.45 * np.abs(np.cos(2.5 * theta)))
    soft = lambda d: np.clip(0.5 - d, 0.0, 1.0)  # ~1 px anti-aliased edge

    img = 20.0 + 40.0 * (yy / size)
    stem = soft(np.abs(xx - cx - 0.08 * (yy - cy)) - 1.5) * (yy > cy)
    img = img * (1 - stem) + 120.0 * stem
    petals = soft(r - petal_r)
    shade = 225.0 + 25.0 * np.cos(theta * 5.0) * (r / (0.34 * size))
    img = img * (1 - petals) + np.clip(shade, 0, 255) * petals
    disc = soft(r - 0.1 * size)
    img = img * (1 - disc) + 60.0 * disc
    raw = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return normalize_pixels(raw, size, size)


def bundled_flower() -> ImageTensor:
    """The 92x92 flower shipped with the package (written from :func:`synthetic_flower`)."""
    from importlib.resources import files

    from .formats import read_pgm

    return read_pgm(files("tempocomp") / "data" / "flower92.pgm")
