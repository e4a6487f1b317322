"""Correction terms for log-domain addition.

delta_plus(d)  = log2(1 + 2**-d)
delta_minus(d) = log2(1 - 2**-d)

Three evaluators: exact (double precision, grid-rounded), uniform lookup
table over [0, d_max] with resolution r, and the bit-shift rule
delta_plus ~ 2**-round(d), delta_minus ~ -1.5 * 2**-round(d).  The
bit-shift rule coincides with an r=1 table filled with those shift values.

delta_minus at d == 0 is the "most negative number" case: evaluators
return the SENTINEL marker and the adder turns it into canonical zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lnsformat import SENTINEL, LnsFormat, round_half_even

MODE_EXACT = 0
MODE_LUT = 1
MODE_BITSHIFT = 2

_MODE_IDS = {"exact": MODE_EXACT, "lut": MODE_LUT, "bitshift": MODE_BITSHIFT}

_EMPTY = np.zeros(1, dtype=np.int64)


def delta_plus_exact(d: float) -> float:
    return math.log2(1.0 + 2.0 ** (-d))


def delta_minus_exact(d: float) -> float:
    if d == 0.0:
        return -math.inf
    return math.log2(1.0 - 2.0 ** (-d))


@dataclass(frozen=True)
class DeltaTable:
    d_max: float
    r: float
    fmt: LnsFormat
    entries_plus: np.ndarray   # int64 grid codes
    entries_minus: np.ndarray  # int64 grid codes; [0] is SENTINEL

    @property
    def size(self) -> int:
        return self.entries_plus.size

    def sample_points(self) -> np.ndarray:
        return np.arange(self.size) * self.r


def build_table(d_max: float, r: float, fmt: LnsFormat) -> DeltaTable:
    """Uniform table of grid-quantized correction values at d = k*r."""
    if d_max <= 0 or r <= 0:
        raise ValueError("d_max and r must be positive")
    n = d_max / r
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"d_max/r must be integral, got {d_max}/{r}")
    n = int(round(n))
    scale = fmt.scale
    plus = np.empty(n, dtype=np.int64)
    minus = np.empty(n, dtype=np.int64)
    for k in range(n):
        d = k * r
        plus[k] = round_half_even(delta_plus_exact(d) * scale)
        minus[k] = SENTINEL if k == 0 else round_half_even(delta_minus_exact(d) * scale)
    return DeltaTable(d_max, r, fmt, plus, minus)


def build_shift_table(fmt: LnsFormat) -> DeltaTable:
    """r=1 table holding the bit-shift values; spans the format's full
    range of log-differences, so lookups through it match BitShift mode."""
    d_max = float(1 << (fmt.q_i + 1))  # max possible |X - Y|
    n = int(d_max)
    plus = np.empty(n, dtype=np.int64)
    minus = np.empty(n, dtype=np.int64)
    for k in range(n):
        plus[k] = _shift_plus_code(k, fmt.q_f)
        minus[k] = SENTINEL if k == 0 else _shift_minus_code(k, fmt.q_f)
    return DeltaTable(d_max, 1.0, fmt, plus, minus)


def _shift_plus_code(n: int, q_f: int) -> int:
    e = q_f - n
    return 1 << e if e >= 0 else round_half_even(2.0**e)


def _shift_minus_code(n: int, q_f: int) -> int:
    e = q_f - n
    return -(3 << (e - 1)) if e >= 1 else -round_half_even(1.5 * 2.0**e)


# direct-indexed tables are materialized up to this many grid points
_DIRECT_LIMIT = 1 << 21


@dataclass(frozen=True)
class DeltaApproximator:
    mode: str
    fmt: LnsFormat
    table: DeltaTable | None = None

    @classmethod
    def exact(cls, fmt: LnsFormat) -> "DeltaApproximator":
        return cls("exact", fmt)

    @classmethod
    def lut(cls, table: DeltaTable) -> "DeltaApproximator":
        return cls("lut", table.fmt, table)

    @classmethod
    def bitshift(cls, fmt: LnsFormat) -> "DeltaApproximator":
        return cls("bitshift", fmt)

    def raw_kernel_args(self) -> tuple:
        """(mode_id, lut_plus, lut_minus, r_code, dmax_code) consumed by
        the jitted adder."""
        mode_id = _MODE_IDS[self.mode]
        if self.mode == "lut":
            t = self.table
            return (mode_id, t.entries_plus, t.entries_minus,
                    float(t.r * self.fmt.scale),
                    int(round(t.d_max * self.fmt.scale)))
        return (mode_id, _EMPTY, _EMPTY, 1.0, 0)

    def kernel_args(self) -> tuple:
        """Like raw_kernel_args but with the evaluator flattened into
        tables indexed directly by d_code when the format is small enough;
        bit-identical outputs, one load per lookup."""
        cached = getattr(self, "_direct", None)
        if cached is not None:
            return cached
        from . import _kernels as K

        raw = self.raw_kernel_args()
        fmt = self.fmt
        span = fmt.max_code - fmt.min_code + 1
        if span > _DIRECT_LIMIT:
            args = raw
        else:
            out_p = np.empty(span, dtype=np.int64)
            out_m = np.empty(span, dtype=np.int64)
            K.k_build_direct(*raw, fmt.scale, fmt.q_f, out_p, out_m)
            args = (K.MODE_DIRECT, out_p, out_m, 1.0, 0)
        object.__setattr__(self, "_direct", args)
        return args

    def plus_code(self, d: float) -> int:
        return self._code(d, True)

    def minus_code(self, d: float) -> int:
        return self._code(d, False)

    def _code(self, d: float, plus: bool) -> int:
        from ._kernels import delta_code

        if d < 0:
            raise ValueError("log-difference d must be nonnegative")
        fmt = self.fmt
        d_code = round_half_even(d * fmt.scale)
        mode_id, lutp, lutm, r_code, dmax_code = self.kernel_args()
        return int(delta_code(d_code, plus, mode_id, lutp, lutm, r_code,
                              dmax_code, fmt.scale, fmt.q_f))


def delta_plus(d: float, a: DeltaApproximator) -> float:
    """Grid-quantized delta_plus in log units."""
    return a.plus_code(d) / a.fmt.scale


def delta_minus(d: float, a: DeltaApproximator) -> float:
    """Grid-quantized delta_minus in log units; -inf for the d=0 case."""
    c = a.minus_code(d)
    return -math.inf if c <= SENTINEL else c / a.fmt.scale


def error_profile(a: DeltaApproximator, n_samples: int = 4096) -> dict:
    """Max/mean absolute error of each curve against the exact formulas,
    swept over d in [0, 2*d_max]; points where the evaluator returns the
    d=0 sentinel are excluded."""
    if a.mode == "lut":
        d_hi = 2.0 * a.table.d_max
    else:
        d_hi = 2.0 * float(1 << a.fmt.q_i)
    ds = np.linspace(0.0, d_hi, n_samples)
    errs_p, errs_m = [], []
    for d in ds:
        errs_p.append(abs(delta_plus(d, a) - delta_plus_exact(d)))
        dm = delta_minus(d, a)
        if math.isinf(dm):
            continue
        errs_m.append(abs(dm - delta_minus_exact(d)))
    return {
        "plus_max": float(np.max(errs_p)),
        "plus_mean": float(np.mean(errs_p)),
        "minus_max": float(np.max(errs_m)) if errs_m else 0.0,
        "minus_mean": float(np.mean(errs_m)) if errs_m else 0.0,
    }
