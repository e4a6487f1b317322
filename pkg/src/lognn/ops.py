"""Scalar log-domain arithmetic: multiply, add, subtract, exponentiation,
and bridges to/from linear fixed point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .delta import DeltaApproximator
from .fixedpoint import FixedFormat, FixedScalar, rne_shift_right, _saturate
from .lnsformat import (SIGN_NEG, SIGN_POS, LnsFormat, LnsScalar, decode,
                        encode, lns_zero, round_half_even)


def _fmt_args(fmt: LnsFormat) -> tuple:
    return fmt.zero_code, fmt.max_code


def lns_mul(a: LnsScalar, b: LnsScalar) -> LnsScalar:
    if a.fmt != b.fmt:
        raise ValueError("operands must share a format")
    c, s = K.mul_code(a.code, a.sign, b.code, b.sign, *_fmt_args(a.fmt))
    return LnsScalar(int(c), int(s), a.fmt)


def lns_add(a: LnsScalar, b: LnsScalar, d: DeltaApproximator) -> LnsScalar:
    if a.fmt != b.fmt:
        raise ValueError("operands must share a format")
    if d.fmt != a.fmt:
        raise ValueError("approximator serves a different format")
    fmt = a.fmt
    c, s = K.add_code(a.code, a.sign, b.code, b.sign, fmt.zero_code, fmt.max_code,
                      *d.kernel_args(), fmt.scale, fmt.q_f)
    return LnsScalar(int(c), int(s), fmt)


def lns_sub(a: LnsScalar, b: LnsScalar, d: DeltaApproximator) -> LnsScalar:
    return lns_add(a, b.flip_sign(), d)


def lns_exp_posradix(x: LnsScalar, y: FixedScalar) -> LnsScalar:
    """x**y for positive radix x given as its log-magnitude; the result's
    log-magnitude is the linear fixed-point product y * X."""
    fmt = x.fmt
    if x.is_zero:
        # 0**y: zero for y > 0, one for y == 0 by the x^0 = 1 convention
        return LnsScalar(0, SIGN_POS, fmt) if y.code == 0 else lns_zero(fmt)
    code = rne_shift_right(y.code * x.code, y.fmt.b_f)
    if code <= fmt.zero_code:
        return lns_zero(fmt)
    if code > fmt.max_code:
        code = fmt.max_code
    return LnsScalar(code, SIGN_POS, fmt)


@dataclass(frozen=True)
class Pow2FracTable:
    """Uniform table of 2**F for F in [0, 1); entry k holds 2**(k/size)."""

    size: int = 64
    entries: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.entries is None:
            ks = np.arange(self.size, dtype=np.float64)
            object.__setattr__(self, "entries", 2.0 ** (ks / self.size))

    @property
    def resolution(self) -> float:
        return 1.0 / self.size


def lns_to_fixed(a: LnsScalar, out_fmt: FixedFormat, pow2: Pow2FracTable) -> FixedScalar:
    """sign * 2**X realized as a fraction-table lookup plus an integer
    shift, rounded/saturated into out_fmt."""
    if a.is_zero:
        return FixedScalar(0, out_fmt)
    out = np.empty(1, dtype=np.int64)
    K.k_lns_to_fixed(np.array([a.code], dtype=np.int64),
                     np.array([a.sign], dtype=np.uint8),
                     pow2.entries, out, out_fmt.b_f,
                     out_fmt.min_code, out_fmt.max_code,
                     a.fmt.zero_code, a.fmt.scale)
    return FixedScalar(int(out[0]), out_fmt)


def fixed_to_lns_exact(a: FixedScalar, fmt: LnsFormat) -> LnsScalar:
    return encode(a.value(), fmt)


def fixed_to_lns_approx(a: FixedScalar, fmt: LnsFormat,
                        d: DeltaApproximator) -> LnsScalar:
    """log2 of a sum of powers of two: fold log-domain addition over the
    set bits of |code|, ascending."""
    if a.code == 0:
        return lns_zero(fmt)
    mag = abs(a.code)
    acc = lns_zero(fmt)
    bit = 0
    while mag:
        if mag & 1:
            exp = bit - a.fmt.b_f
            term_code = exp * fmt.scale
            if term_code > fmt.max_code:
                term_code = fmt.max_code
            if term_code > fmt.zero_code:
                acc = lns_add(acc, LnsScalar(term_code, SIGN_POS, fmt), d)
        mag >>= 1
        bit += 1
    if acc.is_zero:
        return acc
    return LnsScalar(acc.code, SIGN_POS if a.code > 0 else SIGN_NEG, fmt)
