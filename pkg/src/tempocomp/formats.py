"""Readers and writers for IDX, binary PGM, CSV matrices and weight banks."""

from __future__ import annotations

import csv
import gzip
import io
import json
import os
from pathlib import Path

import numpy as np

from .encoding import ImageTensor, normalize_pixels
from .errors import DataError, FormatError

DATA_ENV = "TEMPOCOMP_DATA_DIR"

_IDX_TYPES = {0x08: np.dtype(np.uint8)}


def _open_maybe_gz(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Read an IDX file (optionally gzipped) into a uint8 array of its declared shape."""
    try:
        with _open_maybe_gz(path) as fh:
            blob = fh.read()
    except (OSError, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if len(blob) < 4 or blob[0] != 0 or blob[1] != 0 or blob[2] not in _IDX_TYPES:
        raise FormatError(f"{path}: not an unsigned-byte IDX file (bad magic)")
    ndim = blob[3]
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise FormatError(f"{path}: truncated IDX header")
    dims = tuple(int(d) for d in np.frombuffer(blob, dtype=">u4", count=ndim, offset=4))
    need = int(np.prod(dims, dtype=np.int64))
    if len(blob) - header != need:
        raise FormatError(f"{path}: payload has {len(blob) - header} bytes, header implies {need}")
    return np.frombuffer(blob, dtype=np.uint8, offset=header).reshape(dims)


def write_idx(arr, path) -> None:
    a = np.ascontiguousarray(arr, dtype=np.uint8)
    head = bytes([0, 0, 0x08, a.ndim]) + np.array(a.shape, dtype=">u4").tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(head + a.tobytes())


def _pgm_tokens(blob: bytes, count: int):
    """First ``count`` header tokens of a PNM file and the offset after them."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(blob[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte precedes the raster


def read_pgm(path) -> ImageTensor:
    blob = Path(path).read_bytes()
    try:
        (magic, w, h, maxval), pos = _pgm_tokens(blob, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError(f"{path}: malformed PGM header") from None
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if magic != b"P5":
        raise FormatError(f"{path}: only binary P5 PGM is supported, got {magic.decode(errors='replace')}")
    if maxval != 255:
        raise FormatError(f"{path}: maxval must be 255, got {maxval}")
    raster = blob[pos:pos + w * h]
    if len(raster) != w * h:
        raise FormatError(f"{path}: truncated raster")
    return normalize_pixels(np.frombuffer(raster, dtype=np.uint8), h, w)


def to_bytes(img: ImageTensor) -> np.ndarray:
    return np.rint(img.pixels * 255.0).astype(np.uint8)


def write_pgm(img: ImageTensor, path) -> None:
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.width, img.height))
        fh.write(to_bytes(img).tobytes())


# -- CSV matrices --------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix_csv(arr, path, header: list[str] | None = None, comment: str | None = None):
    a = np.atleast_2d(np.asarray(arr))
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        out = csv.writer(fh, lineterminator="\n")
        if header:
            out.writerow(header)
        for row in a:
            out.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_matrix_csv(path) -> np.ndarray:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        rows = [[float(v) for v in r] for r in csv.reader(io.StringIO("\n".join(lines)))]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: empty or ragged matrix")
    return np.array(rows)


def write_fcspec(spec, path) -> None:
    c, d = spec.weights.shape
    write_matrix_csv(spec.weights, path, comment=f"fcspec {c} {d}")


def read_fcspec(path):
    from .nn import FcSpec

    with open(path) as fh:
        first = fh.readline().split()
    if len(first) != 4 or first[:2] != ["#", "fcspec"]:
        raise FormatError(f"{path}: missing '# fcspec C D' header")
    try:
        c, d = int(first[2]), int(first[3])
    except ValueError:
        raise FormatError(f"{path}: bad fcspec dimensions") from None
    w = read_matrix_csv(path)
    if w.shape != (c, d):
        raise FormatError(f"{path}: header says {c}x{d}, body is {w.shape[0]}x{w.shape[1]}")
    return FcSpec(w)


def write_kernel(spec, path) -> None:
    write_matrix_csv(spec.kernel, path)


def read_kernel(path, padding: int | None = None, stride: int = 1):
    from .nn import ConvSpec

    k = read_matrix_csv(path)
    return ConvSpec(k, padding=k.shape[0] // 2 if padding is None else padding, stride=stride)


def write_detspec(spec, path) -> None:
    doc = {"window": spec.window, "stride": spec.stride, "labels": list(spec.labels),
           "thresholds": list(spec.thresholds), "classifiers": spec.classifiers.tolist()}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_detspec(path):
    from .nn import DetectionSpec

    try:
        doc = json.loads(Path(path).read_text())
        return DetectionSpec(doc["window"], doc["stride"], tuple(doc["labels"]),
                             np.array(doc["classifiers"]), tuple(doc["thresholds"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: {exc}") from None


# -- MNIST ----------------------------------------------------------------------

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _repo_data_dir() -> Path:
    return Path(__file__).resolve().parents[2] / "data" / "mnist"


def find_mnist_dir(explicit=None) -> Path:
    """Locate the MNIST IDX files: explicit path, then $TEMPOCOMP_DATA_DIR, then ./data/mnist."""
    candidates = [explicit, os.environ.get(DATA_ENV), _repo_data_dir(), Path("data/mnist")]
    for c in candidates:
        if not c:
            continue
        for d in (Path(c), Path(c) / "mnist"):
            if _find(d, MNIST_FILES["test"][0]) is not None:
                return d
    raise DataError(f"MNIST IDX files not found; set {DATA_ENV} or pass --data-dir")


def _find(d: Path, stem: str):
    for name in (stem, stem + ".gz"):
        if (d / name).is_file():
            return d / name
    return None


def load_mnist(split: str = "train", data_dir=None, limit: int | None = None):
    """(images in [0,1] as float64 (n, 28, 28), labels uint8)."""
    d = find_mnist_dir(data_dir)
    img_stem, lab_stem = MNIST_FILES[split]
    images = read_idx(_find(d, img_stem))
    labels = read_idx(_find(d, lab_stem))
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{split}: {images.shape[0]} images but {labels.shape[0]} labels")
    if limit is not None:
        images, labels = images[:limit], labels[:limit]
    return images.astype(np.float64) / 255.0, labels.astype(np.int64)
