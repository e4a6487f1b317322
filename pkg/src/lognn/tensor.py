"""Dense log-domain vectors and matrices.

Storage is a pair of numpy arrays (int64 grid codes, uint8 signs) sharing
one format.  Accumulation order in every reduction is fixed (ascending
index, bias last) because approximate log-domain addition is not
associative; results are bit-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .delta import DeltaApproximator
from .lnsformat import LnsFormat, LnsScalar, decode_array, encode_array


@dataclass
class LnsArray:
    codes: np.ndarray
    signs: np.ndarray
    fmt: LnsFormat

    def __post_init__(self):
        if self.codes.shape != self.signs.shape:
            raise ValueError("codes/signs shape mismatch")

    @property
    def shape(self) -> tuple:
        return self.codes.shape

    @classmethod
    def zeros(cls, shape, fmt: LnsFormat) -> "LnsArray":
        return cls(np.full(shape, fmt.zero_code, dtype=np.int64),
                   np.ones(shape, dtype=np.uint8), fmt)

    @classmethod
    def from_values(cls, values, fmt: LnsFormat) -> "LnsArray":
        codes, signs = encode_array(np.asarray(values), fmt)
        return cls(codes, signs, fmt)

    def to_values(self) -> np.ndarray:
        return decode_array(self.codes, self.signs, self.fmt)

    def item(self, *idx) -> LnsScalar:
        return LnsScalar(int(self.codes[idx]), int(self.signs[idx]), self.fmt)

    def copy(self) -> "LnsArray":
        return LnsArray(self.codes.copy(), self.signs.copy(), self.fmt)

    def fill_zero(self) -> None:
        K.k_fill_zero(self.codes.reshape(-1), self.signs.reshape(-1),
                      self.fmt.zero_code)


LnsVector = LnsArray
LnsMatrix = LnsArray


def _args(fmt: LnsFormat, d: DeltaApproximator) -> tuple:
    if d.fmt != fmt:
        raise ValueError("approximator serves a different format")
    return (fmt.zero_code, fmt.max_code) + d.kernel_args() + (fmt.scale, fmt.q_f)


def gemv(w: LnsMatrix, x: LnsVector, b: LnsVector, d: DeltaApproximator) -> LnsVector:
    m, n = w.shape
    if x.shape != (n,) or b.shape != (m,):
        raise ValueError(f"shape mismatch: W {w.shape}, x {x.shape}, b {b.shape}")
    out = LnsArray.zeros((m,), w.fmt)
    K.k_gemv(w.codes, w.signs, x.codes, x.signs, b.codes, b.signs,
             out.codes, out.signs, *_args(w.fmt, d))
    return out


def gemv_transpose(w: LnsMatrix, dlt: LnsVector, d: DeltaApproximator) -> LnsVector:
    m, n = w.shape
    if dlt.shape != (m,):
        raise ValueError(f"shape mismatch: W {w.shape}, delta {dlt.shape}")
    out = LnsArray.zeros((n,), w.fmt)
    K.k_gemv_t(w.codes, w.signs, dlt.codes, dlt.signs,
               out.codes, out.signs, *_args(w.fmt, d))
    return out


def outer_product(u: LnsVector, v: LnsVector) -> LnsMatrix:
    out = LnsArray.zeros((u.shape[0], v.shape[0]), u.fmt)
    K.k_outer(u.codes, u.signs, v.codes, v.signs, out.codes, out.signs,
              u.fmt.zero_code, u.fmt.max_code)
    return out


def elementwise_mul(a: LnsArray, b: LnsArray) -> LnsArray:
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    out = LnsArray.zeros(a.shape, a.fmt)
    K.k_ew_mul(a.codes.reshape(-1), a.signs.reshape(-1),
               b.codes.reshape(-1), b.signs.reshape(-1),
               out.codes.reshape(-1), out.signs.reshape(-1),
               a.fmt.zero_code, a.fmt.max_code)
    return out


def elementwise_add(a: LnsArray, b: LnsArray, d: DeltaApproximator) -> LnsArray:
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    out = LnsArray.zeros(a.shape, a.fmt)
    K.k_ew_add(a.codes.reshape(-1), a.signs.reshape(-1),
               b.codes.reshape(-1), b.signs.reshape(-1),
               out.codes.reshape(-1), out.signs.reshape(-1),
               *_args(a.fmt, d))
    return out


def accumulate_outer(g: LnsMatrix, u: LnsVector, v: LnsVector,
                     d: DeltaApproximator) -> None:
    K.k_acc_outer(g.codes, g.signs, u.codes, u.signs, v.codes, v.signs,
                  *_args(g.fmt, d))


def accumulate(g: LnsArray, x: LnsArray, d: DeltaApproximator) -> None:
    K.k_acc_vec(g.codes.reshape(-1), g.signs.reshape(-1),
                x.codes.reshape(-1), x.signs.reshape(-1), *_args(g.fmt, d))


def fold_add(x: LnsVector, d: DeltaApproximator) -> LnsScalar:
    c, s = K.k_fold_add(x.codes, x.signs, *_args(x.fmt, d))
    return LnsScalar(int(c), int(s), x.fmt)
