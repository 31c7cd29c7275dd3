"""Neural-network layers and applications running on the photonic engine.

Convolution streams every image patch as a data frame against the flattened
kernel; a fully connected layer streams one frame per class row. There is no
nonlinear activation between layers, only a min-max rescale that keeps the
feature map inside the data modulator's [0, 1] range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .encoding import ImageTensor
from .engine import CalibrationResult, EngineConfig, calibrate_gain, frame_sums
from .errors import DataError, DimensionError, NumericError, RangeError


class Engine(NamedTuple):
    cfg: EngineConfig
    cal: CalibrationResult

    @classmethod
    def calibrated(cls, cfg: EngineConfig) -> "Engine":
        return cls(cfg, calibrate_gain(cfg))


def _check_weights(a: np.ndarray, what: str):
    if not np.all(np.isfinite(a)):
        raise RangeError(f"{what} contains non-finite values")
    if a.size and np.abs(a).max() > 1.0 + 1e-12:
        raise RangeError(f"{what} entries must lie in [-1, 1]")


@dataclass(frozen=True, eq=False)
class ConvSpec:
    kernel: np.ndarray
    padding: int = 0
    stride: int = 1

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] < 1:
            raise DimensionError(f"kernel must be square K x K, got shape {k.shape}")
        _check_weights(k, "kernel")
        if self.padding < 0 or self.stride < 1:
            raise DimensionError("padding must be >= 0 and stride >= 1")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    def output_shape(self, h: int, w: int) -> tuple[int, int]:
        k = self.size
        oh = (h + 2 * self.padding - k) // self.stride + 1
        ow = (w + 2 * self.padding - k) // self.stride + 1
        if k > h + 2 * self.padding or k > w + 2 * self.padding or oh < 1 or ow < 1:
            raise DimensionError(f"{k}x{k} kernel larger than padded {h}x{w} image")
        return oh, ow


@dataclass(frozen=True, eq=False)
class FcSpec:
    weights: np.ndarray
    class_labels: tuple = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or min(w.shape) < 1:
            raise DimensionError(f"FC weights must be a non-empty C x D matrix, got {w.shape}")
        _check_weights(w, "FC weights")
        labels = tuple(self.class_labels) or tuple(range(w.shape[0]))
        if len(labels) != w.shape[0]:
            raise DimensionError(f"{len(labels)} labels for {w.shape[0]} classes")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "class_labels", labels)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class DetectionSpec:
    window: int
    stride: int
    labels: tuple
    classifiers: np.ndarray  # C x window x window
    thresholds: tuple

    def __post_init__(self):
        c = np.array(self.classifiers, dtype=np.float64)
        if c.ndim != 3 or c.shape[1:] != (self.window, self.window):
            raise DimensionError(f"classifiers must be C x {self.window} x {self.window}")
        _check_weights(c, "classifiers")
        if not (len(self.labels) == len(self.thresholds) == c.shape[0]):
            raise DimensionError("labels, thresholds and classifiers differ in count")
        if self.window < 1 or self.stride < 1:
            raise DimensionError("window and stride must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "classifiers", c)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    def grid(self, h: int, w: int) -> tuple[int, int]:
        if self.window > min(h, w) or (h - self.window) % self.stride or (w - self.window) % self.stride:
            raise DimensionError(
                f"{h}x{w} image is not tiled exactly by window {self.window}, stride {self.stride}")
        return (h - self.window) // self.stride + 1, (w - self.window) // self.stride + 1

    def n_patches(self, h: int, w: int) -> int:
        gy, gx = self.grid(h, w)
        return gy * gx


class Detection(NamedTuple):
    label: int
    patch_index: int  # 1-based, row-major
    decision_value: float


# -- kernels -----------------------------------------------------------------

def laplacian_kernel() -> np.ndarray:
    """4-neighbour Laplacian scaled by 1/4 into [-1, 1]."""
    return np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]) / 4.0


def gaussian_kernel(size: int = 5, sigma: float = 1.0) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-r**2 / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.max()


def edge_spec() -> ConvSpec:
    return ConvSpec(laplacian_kernel(), padding=1, stride=1)


def mnist_conv_spec() -> ConvSpec:
    # zero-padding 2 keeps 28x28 -> 28x28, i.e. 784 features
    return ConvSpec(gaussian_kernel(5, 1.0), padding=2, stride=1)


# -- layers ------------------------------------------------------------------

def extract_patches(arr: np.ndarray, k: int, padding: int = 0, stride: int = 1) -> np.ndarray:
    """Row-major (P, k*k) patch matrix of a 2-D array (or (n, P, k*k) for a stack)."""
    arr = np.asarray(arr, dtype=np.float64)
    pad = [(0, 0)] * (arr.ndim - 2) + [(padding, padding)] * 2
    padded = np.pad(arr, pad)
    win = sliding_window_view(padded, (k, k), axis=(-2, -1))[..., ::stride, ::stride, :, :]
    return win.reshape(*arr.shape[:-2], -1, k * k)


def minmax_rescale(raw: np.ndarray) -> ImageTensor:
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = float(raw.min()), float(raw.max())
    span = hi - lo
    pixels = (raw - lo) / span if span > 0 else np.zeros_like(raw)
    return ImageTensor(raw.shape[0], raw.shape[1], np.clip(pixels, 0.0, 1.0), offset=lo, scale=span)


def conv2d_photonic(img: ImageTensor, spec: ConvSpec, engine: Engine, stream=()) -> ImageTensor:
    """Photonic convolution; the returned map records its min-max rescale."""
    oh, ow = spec.output_shape(img.height, img.width)
    patches = extract_patches(img.to_array(), spec.size, spec.padding, spec.stride)
    kernel_rows = np.broadcast_to(spec.kernel.reshape(1, -1), patches.shape)
    raw = frame_sums(patches, kernel_rows, engine.cfg, engine.cal, stream=stream)
    return minmax_rescale(raw.reshape(oh, ow))


def fc_forward_photonic(v, spec: FcSpec, engine: Engine, stream=()) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != spec.n_inputs:
        raise DimensionError(f"input length {v.size} != FC width {spec.n_inputs}")
    data_rows = np.broadcast_to(v, spec.weights.shape)
    return frame_sums(data_rows, spec.weights, engine.cfg, engine.cal, stream=stream)


def classify(scores) -> int:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if s.size == 0:
        raise DimensionError("cannot classify an empty score vector")
    if np.isnan(s).any():
        raise NumericError("NaN score")
    return int(np.argmax(s))  # first maximum wins ties


# -- digital training and inference -------------------------------------------

def conv_features_digital(images, conv: ConvSpec) -> np.ndarray:
    """Min-max normalized conv feature vectors for a stack of images (fast path)."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim == 2:
        images = images[None]
    patches = extract_patches(images, conv.size, conv.padding, conv.stride)
    feats = patches @ conv.kernel.reshape(-1)
    lo = feats.min(axis=1, keepdims=True)
    span = feats.max(axis=1, keepdims=True) - lo
    return np.where(span > 0, (feats - lo) / np.where(span > 0, span, 1.0), 0.0)


def train_softmax(features, labels, n_classes: int, epochs: int = 30,
                  learning_rate: float = 0.3, batch_size: int = 100,
                  l2: float = 1e-4, rng_seed: int = 0) -> np.ndarray:
    """Bias-free linear softmax classifier by mini-batch gradient descent."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape[0] == 0:
        raise DataError("empty training set")
    rng = np.random.default_rng(rng_seed)
    w = np.zeros((n_classes, x.shape[1]))
    rows = np.arange(batch_size)
    for _ in range(epochs):
        order = rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], batch_size):
            b = order[start:start + batch_size]
            z = x[b] @ w.T
            z -= z.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            p[rows[: b.size], y[b]] -= 1.0
            w -= learning_rate * (p.T @ x[b] / b.size + l2 * w)
    return w


def renormalize(w: np.ndarray) -> np.ndarray:
    peak = np.abs(w).max()
    return w / peak if peak > 0 else w


def train_fc_digital(train_images, train_labels, conv: ConvSpec, epochs: int = 30,
                     learning_rate: float = 0.3, rng_seed: int = 0, n_classes: int = 10) -> FcSpec:
    images = np.asarray(train_images, dtype=np.float64)
    labels = np.asarray(train_labels, dtype=np.int64)
    if images.shape[0] == 0:
        raise DataError("empty training set")
    if labels.shape[0] != images.shape[0]:
        raise DataError("image and label counts differ")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DataError(f"labels must be in 0..{n_classes - 1}")
    feats = conv_features_digital(images, conv)
    w = train_softmax(feats, labels, n_classes, epochs, learning_rate, rng_seed=rng_seed)
    return FcSpec(renormalize(w), tuple(range(n_classes)))


def digital_scores(images, conv: ConvSpec, fc: FcSpec) -> np.ndarray:
    return conv_features_digital(images, conv) @ fc.weights.T


def photonic_scores(image, conv: ConvSpec, fc: FcSpec, engine: Engine, stream=(),
                    photonic_features: bool = True) -> np.ndarray:
    """Scores for one image; conv runs photonically unless ``photonic_features`` is off."""
    img = ImageTensor.from_array(image)
    if photonic_features:
        fmap = conv2d_photonic(img, conv, engine, stream=(*stream, 0))
        v = fmap.pixels
    else:
        v = conv_features_digital(img.to_array(), conv)[0]
    return fc_forward_photonic(v, fc, engine, stream=(*stream, 1))


# -- sliding-window detection --------------------------------------------------

def place_digits(digits: Sequence[np.ndarray], cells: Sequence[tuple[int, int]],
                 size: int = 68, stride: int = 10) -> np.ndarray:
    """Compose a canvas with each digit's top-left corner on a grid cell."""
    canvas = np.zeros((size, size))
    for digit, (r, c) in zip(digits, cells):
        d = np.asarray(digit, dtype=np.float64)
        y, x = r * stride, c * stride
        if y + d.shape[0] > size or x + d.shape[1] > size:
            raise DimensionError(f"digit at cell {(r, c)} falls off the canvas")
        canvas[y:y + d.shape[0], x:x + d.shape[1]] = np.maximum(
            canvas[y:y + d.shape[0], x:x + d.shape[1]], d)
    return canvas


def window_patches(arr: np.ndarray, spec: DetectionSpec) -> np.ndarray:
    spec.grid(*np.shape(arr)[-2:])
    return extract_patches(arr, spec.window, 0, spec.stride)


def decision_matrix_photonic(img: ImageTensor, spec: DetectionSpec, engine: Engine,
                             stream=()) -> np.ndarray:
    """P x C matrix of photonic patch/classifier weighted sums."""
    patches = window_patches(img.to_array(), spec)
    n_p, n_c = patches.shape[0], spec.classifiers.shape[0]
    flat_cls = spec.classifiers.reshape(n_c, -1)
    rows_d = np.repeat(patches, n_c, axis=0)
    rows_w = np.tile(flat_cls, (n_p, 1))
    return frame_sums(rows_d, rows_w, engine.cfg, engine.cal, stream=stream).reshape(n_p, n_c)


def detections_from_matrix(matrix: np.ndarray, spec: DetectionSpec) -> list[Detection]:
    out = []
    for p, row in enumerate(np.asarray(matrix)):
        for c, value in enumerate(row):
            if value > spec.thresholds[c]:
                out.append(Detection(spec.labels[c], p + 1, float(value)))
    return out


def sliding_window_detect(img: ImageTensor, spec: DetectionSpec, engine: Engine,
                          stream=()) -> list[Detection]:
    return detections_from_matrix(decision_matrix_photonic(img, spec, engine, stream), spec)


def _random_layout(rng, grid: int, n_digits: int) -> list[tuple[int, int]]:
    """Grid cells far enough apart (Chebyshev >= 3 for 28/10 geometry) not to overlap."""
    cells: list[tuple[int, int]] = []
    candidates = [(r, c) for r in range(grid) for c in range(grid)]
    for _ in range(n_digits):
        free = [rc for rc in candidates
                if all(max(abs(rc[0] - r), abs(rc[1] - c)) >= 3 for r, c in cells)]
        if not free:
            break
        cells.append(free[rng.integers(len(free))])
    return cells


def synth_detection_set(images, labels, n_canvases: int, rng, size: int = 68,
                        window: int = 28, stride: int = 10):
    """Random canvases of 0-3 digits; returns (patches, patch_labels) with -1 for background."""
    grid = (size - window) // stride + 1
    n_img = len(images)
    all_patches, all_labels = [], []
    for _ in range(n_canvases):
        n_digits = int(rng.integers(0, 4))
        cells = _random_layout(rng, grid, n_digits)
        picks = rng.integers(n_img, size=len(cells))
        canvas = place_digits([images[i] for i in picks], cells, size, stride)
        patch_labels = np.full(grid * grid, -1)
        for (r, c), i in zip(cells, picks):
            patch_labels[r * grid + c] = labels[i]
        all_patches.append(extract_patches(canvas, window, 0, stride))
        all_labels.append(patch_labels)
    return np.concatenate(all_patches), np.concatenate(all_labels)


def threshold_midpoint(scores: np.ndarray, positive: np.ndarray) -> float:
    """Midpoint between the highest negative and the lowest positive score."""
    if not positive.any() or positive.all():
        raise DataError("threshold calibration needs both positive and negative patches")
    return 0.5 * (float(scores[~positive].max()) + float(scores[positive].min()))


def train_detector_digital(images, labels, target_labels: Sequence[int] = (0, 4, 8),
                           n_canvases: int = 2000, n_calibration: int = 400,
                           epochs: int = 30, learning_rate: float = 0.5,
                           window: int = 28, stride: int = 10, size: int = 68,
                           rng_seed: int = 0) -> DetectionSpec:
    """One-vs-rest logistic templates on synthetic canvases.

    Negatives include shifted and partial digits from neighbouring windows,
    so each template fires only on a digit aligned with its patch. Thresholds
    come from a disjoint calibration set built from the second half of the images.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] < 2:
        raise DataError("need at least two images to train a detector")
    rng = np.random.default_rng(rng_seed)
    half = images.shape[0] // 2
    x, y = synth_detection_set(images[:half], labels[:half], n_canvases, rng, size, window, stride)
    xc, yc = synth_detection_set(images[half:], labels[half:], n_calibration, rng, size, window,
                                 stride)
    templates, thresholds = [], []
    for label in target_labels:
        target = (y == label).astype(np.float64)
        pos_weight = (target.size - target.sum()) / max(target.sum(), 1.0)
        sample_w = np.where(target > 0, pos_weight, 1.0)
        w = np.zeros(x.shape[1])
        b = 0.0
        order_rng = np.random.default_rng([rng_seed, int(label)])
        for _ in range(epochs):
            order = order_rng.permutation(x.shape[0])
            for start in range(0, x.shape[0], 200):
                idx = order[start:start + 200]
                z = np.clip(x[idx] @ w + b, -50.0, 50.0)
                err = (1.0 / (1.0 + np.exp(-z)) - target[idx]) * sample_w[idx]
                w -= learning_rate * (x[idx].T @ err / idx.size + 1e-4 * w)
                b -= learning_rate * err.mean()
        w = renormalize(w)
        templates.append(w.reshape(window, window))
        thresholds.append(threshold_midpoint(xc @ w, yc == label))
    return DetectionSpec(window, stride, tuple(int(t) for t in target_labels),
                         np.array(templates), tuple(thresholds))
