"""IDX-format dataset loading (MNIST family), validation split, and
conversion to the numeric backends."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .delta import DeltaApproximator
from .fixedpoint import FixedFormat, FixedScalar, fx_encode_array
from .lnsformat import LnsFormat, encode_array
from .ops import fixed_to_lns_approx
from .rng import Xoshiro256StarStar

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxError(Exception):
    """Base class for IDX container problems."""


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxCountMismatchError(IdxError):
    pass


@dataclass
class Dataset:
    images: np.ndarray  # (n, 784) uint8
    labels: np.ndarray  # (n,) int64
    n_classes: int

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise IdxCountMismatchError(
                f"{self.images.shape[0]} images vs {self.labels.shape[0]} labels")

    @property
    def n(self) -> int:
        return self.images.shape[0]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], self.n_classes)


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def load_idx(images_path, labels_path, label_offset: int = 0) -> Dataset:
    img = _read_maybe_gzip(images_path)
    lab = _read_maybe_gzip(labels_path)

    if len(img) < 16:
        raise IdxTruncatedError(f"image file {images_path} too short for header")
    magic, n, rows, cols = struct.unpack(">IIII", img[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise IdxMagicError(f"bad IDX magic {magic:#010x} in {images_path}")
    if rows != 28 or cols != 28:
        raise IdxError(f"expected 28x28 images, got {rows}x{cols}")
    if len(img) - 16 < n * rows * cols:
        raise IdxTruncatedError(
            f"image file {images_path} truncated: header says {n} images")
    images = np.frombuffer(img, dtype=np.uint8, count=n * 784, offset=16)
    images = images.reshape(n, 784).copy()

    if len(lab) < 8:
        raise IdxTruncatedError(f"label file {labels_path} too short for header")
    magic, n_lab = struct.unpack(">II", lab[:8])
    if magic != IDX_LABELS_MAGIC:
        raise IdxMagicError(f"bad IDX magic {magic:#010x} in {labels_path}")
    if len(lab) - 8 < n_lab:
        raise IdxTruncatedError(
            f"label file {labels_path} truncated: header says {n_lab} labels")
    labels = np.frombuffer(lab, dtype=np.uint8, count=n_lab, offset=8).astype(np.int64)

    if n != n_lab:
        raise IdxCountMismatchError(f"{n} images but {n_lab} labels")
    if label_offset:
        labels = labels - label_offset  # EMNIST-letters labels are 1-based
    return Dataset(images, labels, int(labels.max()) + 1)


def split_validation(ds: Dataset, val_fraction: float = 0.2,
                     seed: int = 0) -> tuple[Dataset, Dataset]:
    """Shuffled split; validation gets round(n * val_fraction) samples."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    rng = Xoshiro256StarStar(seed)
    idx = rng.permutation(ds.n)
    n_val = int(round(ds.n * val_fraction))
    return ds.subset(idx[n_val:]), ds.subset(idx[:n_val])


# pixel p maps to p/256: power-of-two scaling is exact in both backends
PIXEL_SCALE = 256.0


def pixel_lns_codes(fmt: LnsFormat, mode: str = "exact",
                    approx: DeltaApproximator | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel-value (256-entry) encoding lookup."""
    if mode == "exact":
        return encode_array(np.arange(256) / PIXEL_SCALE, fmt)
    if mode != "approx":
        raise ValueError(f"unknown conversion mode {mode!r}")
    if approx is None:
        raise ValueError("approx conversion needs a DeltaApproximator")
    pix_fmt = FixedFormat(0, 8)
    codes = np.empty(256, dtype=np.int64)
    signs = np.empty(256, dtype=np.uint8)
    for p in range(256):
        s = fixed_to_lns_approx(FixedScalar(p, pix_fmt), fmt, approx)
        codes[p] = s.code
        signs[p] = s.sign
    return codes, signs


def convert(ds: Dataset, backend: str, fmt=None, mode: str = "exact",
            approx: DeltaApproximator | None = None):
    """Encode pixel intensities for a backend.  Returns (codes, signs) for
    lns, an int64 code array for fixed, a float64 array for float."""
    if backend == "float":
        return ds.images.astype(np.float64) / PIXEL_SCALE
    if backend == "fixed":
        return fx_encode_array(ds.images / PIXEL_SCALE, fmt)
    if backend == "lns":
        lut_c, lut_s = pixel_lns_codes(fmt, mode, approx)
        return lut_c[ds.images], lut_s[ds.images]
    raise ValueError(f"unknown backend {backend!r}")
