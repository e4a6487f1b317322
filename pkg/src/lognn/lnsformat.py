"""Fixed-point logarithmic number representation.

A nonzero real v is stored as (sign, X) with X = log2|v| quantized to a
uniform grid of step 2**-q_f over [X_min, X_max].  The most negative code
of the (q_i + q_f + 1)-bit two's-complement field is reserved as the
canonical zero; results falling below X_min flush to it.  Overflow
saturates at X_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# marker returned by delta evaluators for the "most negative" correction;
# any add seeing it produces canonical zero
SENTINEL = -(1 << 62)

SIGN_POS = 1
SIGN_NEG = 0


@dataclass(frozen=True)
class LnsFormat:
    q_i: int
    q_f: int

    def __post_init__(self):
        if self.q_i < 1 or self.q_f < 1:
            raise ValueError("q_i and q_f must each be >= 1")

    @property
    def scale(self) -> int:
        return 1 << self.q_f

    @property
    def zero_code(self) -> int:
        return -(1 << (self.q_i + self.q_f))

    @property
    def min_code(self) -> int:
        return self.zero_code + 1

    @property
    def max_code(self) -> int:
        return (1 << (self.q_i + self.q_f)) - 1

    @property
    def width(self) -> int:
        # total word: log-magnitude field + its sign + s_x
        return 2 + self.q_i + self.q_f

    @property
    def x_min(self) -> float:
        return self.min_code / self.scale

    @property
    def x_max(self) -> float:
        return self.max_code / self.scale


@dataclass(frozen=True)
class LnsScalar:
    code: int
    sign: int
    fmt: LnsFormat

    @property
    def is_zero(self) -> bool:
        return self.code == self.fmt.zero_code

    @property
    def log_mag(self) -> float:
        return self.code / self.fmt.scale

    def value(self) -> float:
        return decode(self)

    def flip_sign(self) -> "LnsScalar":
        if self.is_zero:
            return self
        return LnsScalar(self.code, SIGN_POS if self.sign == SIGN_NEG else SIGN_NEG, self.fmt)


def round_half_even(x: float) -> int:
    return int(np.rint(x))


def encode(v: float, fmt: LnsFormat) -> LnsScalar:
    """Round-to-nearest onto the log grid; flush-to-zero below X_min,
    saturate above X_max."""
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    if v == 0.0:
        return lns_zero(fmt)
    code = round_half_even(math.log2(abs(v)) * fmt.scale)
    if code < fmt.min_code:
        return lns_zero(fmt)
    if code > fmt.max_code:
        code = fmt.max_code
    return LnsScalar(code, SIGN_POS if v > 0 else SIGN_NEG, fmt)


def decode(a: LnsScalar) -> float:
    if a.is_zero:
        return 0.0
    mag = 2.0 ** (a.code / a.fmt.scale)
    return mag if a.sign == SIGN_POS else -mag


def lns_zero(fmt: LnsFormat) -> LnsScalar:
    return LnsScalar(fmt.zero_code, SIGN_POS, fmt)


def lns_one(fmt: LnsFormat) -> LnsScalar:
    return LnsScalar(0, SIGN_POS, fmt)


def encode_array(v: np.ndarray, fmt: LnsFormat) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized encode; returns (codes int64, signs uint8)."""
    v = np.asarray(v, dtype=np.float64)
    codes = np.full(v.shape, fmt.zero_code, dtype=np.int64)
    signs = np.ones(v.shape, dtype=np.uint8)
    nz = v != 0.0
    with np.errstate(divide="ignore"):
        c = np.rint(np.log2(np.abs(v[nz])) * fmt.scale).astype(np.int64)
    c = np.minimum(c, fmt.max_code)
    flush = c < fmt.min_code
    c[flush] = fmt.zero_code
    s = np.where(v[nz] > 0, SIGN_POS, SIGN_NEG).astype(np.uint8)
    s[flush] = SIGN_POS
    codes[nz] = c
    signs[nz] = s
    return codes, signs


def decode_array(codes: np.ndarray, signs: np.ndarray, fmt: LnsFormat) -> np.ndarray:
    mag = np.where(codes == fmt.zero_code, 0.0, 2.0 ** (codes / fmt.scale))
    return np.where(signs == SIGN_POS, mag, -mag)
