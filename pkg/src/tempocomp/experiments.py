"""End-to-end pipelines: edge detection, MNIST classification, sliding-window
detection and the two-wavelength classifier. The CLI and the acceptance
suite both drive these."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn, oracle
from .encoding import ImageTensor
from .errors import DataError, DimensionError
from .formats import load_mnist
from .wdm import ChannelPlan, execute_plan, plan_matmul

# digit -> 1-based patch index of the 68x68 / 28 / 10 layout; 0 sits in patch 11
DETECTION_LAYOUT = {0: 11, 4: 4, 8: 25}
WDM_DIGITS = (4, 2)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows: true label, columns: predicted

    @classmethod
    def from_labels(cls, true, pred, n_classes: int = 10) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (np.asarray(true, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    return float(np.corrcoef(a, b)[0, 1])


# -- edge detection -------------------------------------------------------------

@dataclass(frozen=True)
class EdgeResult:
    image: ImageTensor
    oracle: np.ndarray
    photonic: ImageTensor
    correlation: float
    max_abs_error: float


def run_edge_detection(img: ImageTensor, engine: nn.Engine, spec: nn.ConvSpec | None = None,
                       ) -> EdgeResult:
    spec = spec or nn.edge_spec()
    ref = oracle.conv2d_digital(img, spec)
    out = nn.conv2d_photonic(img, spec, engine)
    raw = out.raw()
    corr = pearson(raw, ref) if np.ptp(ref) > 0 and np.ptp(raw) > 0 else float("nan")
    return EdgeResult(img, ref, out, corr, float(np.abs(raw - ref).max()))


# -- MNIST ------------------------------------------------------------------------

def mnist_test_subset(n: int = 100, seed: int = 0, data_dir=None):
    images, labels = load_mnist("test", data_dir)
    if n > len(images):
        raise DataError(f"requested {n} test images, only {len(images)} available")
    idx = np.random.default_rng(seed).choice(len(images), n, replace=False)
    return images[idx], labels[idx], idx


def train_mnist(train_count: int = 10000, epochs: int = 30, learning_rate: float = 0.3,
                seed: int = 0, data_dir=None, conv: nn.ConvSpec | None = None):
    conv = conv or nn.mnist_conv_spec()
    images, labels = load_mnist("train", data_dir, limit=train_count)
    fc = nn.train_fc_digital(images, labels, conv, epochs, learning_rate, rng_seed=seed)
    return conv, fc


@dataclass(frozen=True)
class MnistResult:
    labels: np.ndarray
    digital: np.ndarray
    photonic: np.ndarray
    photonic_scores: np.ndarray

    @property
    def digital_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix.from_labels(self.labels, self.digital)

    @property
    def photonic_confusion(self) -> ConfusionMatrix:
        return ConfusionMatrix.from_labels(self.labels, self.photonic)


def run_mnist_inference(images, labels, conv: nn.ConvSpec, fc: nn.FcSpec, engine: nn.Engine,
                        photonic_features: bool = True) -> MnistResult:
    digital = np.argmax(nn.digital_scores(images, conv, fc), axis=1)
    scores = np.array([
        nn.photonic_scores(img, conv, fc, engine, stream=(k,), photonic_features=photonic_features)
        for k, img in enumerate(images)
    ])
    photonic = np.array([nn.classify(s) for s in scores])
    return MnistResult(np.asarray(labels), digital, photonic, scores)


# -- sliding-window detection -------------------------------------------------------

def prototype_index(images, labels, label: int) -> int:
    """Index of the instance closest to its class mean: a clean exemplar digit."""
    idx = np.flatnonzero(np.asarray(labels) == label)
    if idx.size == 0:
        raise DataError(f"no images with label {label}")
    mean = images[idx].mean(axis=0)
    return int(idx[np.argmin(((images[idx] - mean) ** 2).sum(axis=(1, 2)))])


def patch_cell(patch_index: int, grid: int = 5) -> tuple[int, int]:
    if not 1 <= patch_index <= grid * grid:
        raise DimensionError(f"patch index {patch_index} outside 1..{grid * grid}")
    return divmod(patch_index - 1, grid)


@dataclass(frozen=True)
class DetectionRun:
    canvas: ImageTensor
    matrix: np.ndarray
    oracle_matrix: np.ndarray
    detections: list
    layout: dict


def build_detection_canvas(images, labels, layout: dict | None = None, size: int = 68,
                           window: int = 28, stride: int = 10) -> ImageTensor:
    layout = DETECTION_LAYOUT if layout is None else layout
    grid = (size - window) // stride + 1
    digits = [images[prototype_index(images, labels, d)] for d in layout]
    cells = [patch_cell(p, grid) for p in layout.values()]
    return ImageTensor.from_array(nn.place_digits(digits, cells, size, stride))


def train_detector(train_count: int = 10000, seed: int = 0, data_dir=None,
                   labels=tuple(DETECTION_LAYOUT)) -> nn.DetectionSpec:
    images, y = load_mnist("train", data_dir, limit=train_count)
    return nn.train_detector_digital(images, y, labels, rng_seed=seed)


def run_detection(canvas: ImageTensor, spec: nn.DetectionSpec, engine: nn.Engine,
                  layout: dict | None = None) -> DetectionRun:
    matrix = nn.decision_matrix_photonic(canvas, spec, engine)
    return DetectionRun(canvas, matrix, oracle.detect_digital(canvas, spec),
                        nn.detections_from_matrix(matrix, spec),
                        DETECTION_LAYOUT if layout is None else layout)


# -- two-wavelength classifier ---------------------------------------------------------

def pixel_conv_spec() -> nn.ConvSpec:
    """1x1 identity 'convolution': the FC layer sees the min-max normalized pixels."""
    return nn.ConvSpec(np.ones((1, 1)))


@dataclass(frozen=True)
class WdmRun:
    plan: ChannelPlan
    vectors: np.ndarray
    labels: tuple
    parallel: np.ndarray
    sequential: np.ndarray


def wdm_vectors(digits=WDM_DIGITS, data_dir=None):
    images, labels = load_mnist("test", data_dir)
    conv = pixel_conv_spec()
    picks = [images[prototype_index(images, labels, d)] for d in digits]
    return nn.conv_features_digital(np.array(picks), conv)


def run_wdm_demo(vectors, fc: nn.FcSpec, engine: nn.Engine, labels=WDM_DIGITS,
                 crosstalk_db: float = float("-inf")) -> WdmRun:
    from .engine import batched_weighted_sum

    v = np.atleast_2d(vectors)
    plan = plan_matmul(v.shape[0], v.shape[1], fc.n_classes, n_wavelengths=v.shape[0],
                       n_spatial=1, crosstalk_db=crosstalk_db)
    parallel = execute_plan(v, fc.weights, plan, engine.cfg, engine.cal)
    sequential = batched_weighted_sum(v, fc.weights, engine.cfg, engine.cal)
    return WdmRun(plan, v, tuple(labels), parallel, sequential)
