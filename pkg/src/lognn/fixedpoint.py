"""Linear-domain two's-complement fixed point.

Used by the baseline trainer and by the LNS <-> linear bridges.  Codes are
integers in units of 2**-b_f; range [-2**b_i, 2**b_i - 2**-b_f] with
saturating arithmetic and round-half-to-even on products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FixedFormat:
    b_i: int
    b_f: int

    def __post_init__(self):
        if self.b_i < 0 or self.b_f < 1:
            raise ValueError("need b_i >= 0 and b_f >= 1")

    @property
    def scale(self) -> int:
        return 1 << self.b_f

    @property
    def min_code(self) -> int:
        return -(1 << (self.b_i + self.b_f))

    @property
    def max_code(self) -> int:
        return (1 << (self.b_i + self.b_f)) - 1

    @property
    def width(self) -> int:
        return 1 + self.b_i + self.b_f


@dataclass(frozen=True)
class FixedScalar:
    code: int
    fmt: FixedFormat

    def value(self) -> float:
        return self.code / self.fmt.scale


def rne_shift_right(p: int, sh: int) -> int:
    """Arithmetic shift right by sh with round-half-to-even (sh >= 0)."""
    if sh == 0:
        return p
    q = p >> sh
    r = p - (q << sh)
    half = 1 << (sh - 1)
    if r > half or (r == half and (q & 1)):
        q += 1
    return q


def _saturate(code: int, fmt: FixedFormat) -> int:
    return min(max(code, fmt.min_code), fmt.max_code)


def fx_encode(v: float, fmt: FixedFormat) -> FixedScalar:
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return FixedScalar(_saturate(int(np.rint(v * fmt.scale)), fmt), fmt)


def fx_add(a: FixedScalar, b: FixedScalar) -> FixedScalar:
    return FixedScalar(_saturate(a.code + b.code, a.fmt), a.fmt)


def fx_sub(a: FixedScalar, b: FixedScalar) -> FixedScalar:
    return FixedScalar(_saturate(a.code - b.code, a.fmt), a.fmt)


def fx_mul(a: FixedScalar, b: FixedScalar) -> FixedScalar:
    p = rne_shift_right(a.code * b.code, a.fmt.b_f)
    return FixedScalar(_saturate(p, a.fmt), a.fmt)


def fx_encode_array(v: np.ndarray, fmt: FixedFormat) -> np.ndarray:
    codes = np.rint(np.asarray(v, dtype=np.float64) * fmt.scale).astype(np.int64)
    return np.clip(codes, fmt.min_code, fmt.max_code)


def fx_decode_array(codes: np.ndarray, fmt: FixedFormat) -> np.ndarray:
    return codes.astype(np.float64) / fmt.scale


def rne_shift_right_array(p: np.ndarray, sh: int) -> np.ndarray:
    if sh == 0:
        return p
    q = p >> sh
    r = p - (q << sh)
    half = 1 << (sh - 1)
    bump = (r > half) | ((r == half) & ((q & 1) != 0))
    return q + bump


def required_log_width(b_i: int, b_f: int, w_lin: int) -> int:
    """Log-domain word width guaranteeing the range and precision of a
    linear word with b_i/b_f integer/fraction bits and total width w_lin."""
    if b_i < 0 or b_f < 1:
        raise ValueError("need b_i >= 0 and b_f >= 1")
    ceil_log2_bi1 = (b_i + 1 - 1).bit_length() if b_i + 1 > 1 else 0
    ceil_log2_bf = (b_f - 1).bit_length() if b_f > 1 else 0
    return 1 + max(ceil_log2_bi1, ceil_log2_bf) + w_lin
