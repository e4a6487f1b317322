"""MLP training ops and models over three numeric backends: log-domain
fixed point (the point of the exercise), linear fixed point, and float64.

Backends share the weight-initialization draw stream so their starting
parameters agree to encoding precision, which is what makes the
cross-backend equivalence checks meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .delta import DeltaApproximator, build_table
from .fixedpoint import (FixedFormat, fx_decode_array, fx_encode_array,
                         rne_shift_right_array)
from .lnsformat import (SIGN_NEG, SIGN_POS, LnsFormat, LnsScalar, lns_zero,
                        round_half_even)
from .ops import Pow2FracTable
from .rng import Xoshiro256StarStar
from .tensor import LnsArray, LnsMatrix, LnsVector

LOG2E = math.log2(math.e)


# ---------------------------------------------------------------------------
# configuration

@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 5
    epochs: int = 20
    weight_decay: float = 1e-4
    seed: int = 1
    beta: float = -7.0            # llReLU log-slope (leak factor 2**beta)
    hidden: int = 100
    backend: str = "lns"          # lns | fixed | float
    lns_fmt: LnsFormat = LnsFormat(4, 10)
    fixed_fmt: FixedFormat = FixedFormat(4, 11)
    approx: str = "lut"           # exact | lut | bitshift
    dmax: float = 10.0
    res: float = 0.5
    softmax_approx: str = "lut"   # exact | lut (softmax is more sensitive)
    softmax_dmax: float = 10.0
    softmax_res: float = 1.0 / 64.0
    pow2_size: int = 64

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def general_approximator(self) -> DeltaApproximator:
        if self.approx == "exact":
            return DeltaApproximator.exact(self.lns_fmt)
        if self.approx == "bitshift":
            return DeltaApproximator.bitshift(self.lns_fmt)
        return DeltaApproximator.lut(build_table(self.dmax, self.res, self.lns_fmt))

    def softmax_approximator(self) -> DeltaApproximator:
        if self.softmax_approx == "exact":
            return DeltaApproximator.exact(self.lns_fmt)
        return DeltaApproximator.lut(
            build_table(self.softmax_dmax, self.softmax_res, self.lns_fmt))


# ---------------------------------------------------------------------------
# activation

def llrelu(a: LnsScalar, beta: float) -> LnsScalar:
    """Log-domain leaky ReLU: identity on positive signs, X + beta on
    negative signs (i.e. multiply by slope 2**beta)."""
    if beta >= 0:
        raise ValueError("beta must be negative (leak slope < 1)")
    if a.is_zero or a.sign == SIGN_POS:
        return a
    code = a.code + round_half_even(beta * a.fmt.scale)
    if code <= a.fmt.zero_code:
        return lns_zero(a.fmt)
    return LnsScalar(code, SIGN_NEG, a.fmt)


def llrelu_deriv_logmul(dlt: LnsScalar, pre_activation_sign: int,
                        beta: float) -> LnsScalar:
    """Multiply an incoming delta by the llReLU derivative: 1 where the
    pre-activation was positive, 2**beta where negative."""
    if pre_activation_sign == SIGN_POS or dlt.is_zero:
        return dlt
    code = dlt.code + round_half_even(beta * dlt.fmt.scale)
    if code <= dlt.fmt.zero_code:
        return lns_zero(dlt.fmt)
    return LnsScalar(code, dlt.sign, dlt.fmt)


# ---------------------------------------------------------------------------
# softmax / cross-entropy

def activation_fixed_format(fmt: LnsFormat) -> FixedFormat:
    # one headroom bit over the log format's integer range; fraction bits
    # equal q_f so the linear log2 p values land on the log grid directly
    return FixedFormat(fmt.q_i + 1, fmt.q_f)


def log_softmax(z: LnsVector, softmax_delta: DeltaApproximator,
                pow2: Pow2FracTable) -> tuple[np.ndarray, LnsVector]:
    """Returns (log2 p as linear fixed codes on the log grid, P as LNS
    probabilities).  The normalizer is the log-domain fold of
    (a_j * log2 e, +) over j."""
    fmt = z.fmt
    n = z.shape[0]
    if n < 2:
        raise ValueError("softmax needs at least two classes")
    a_fmt = activation_fixed_format(fmt)
    log2e_code = round_half_even(LOG2E * a_fmt.scale)
    logp = np.empty(n, dtype=np.int64)
    pc = np.empty(n, dtype=np.int64)
    ps = np.empty(n, dtype=np.uint8)
    K.k_log_softmax(z.codes, z.signs, pow2.entries, log2e_code,
                    a_fmt.b_f, a_fmt.min_code, a_fmt.max_code,
                    logp, pc, ps, fmt.zero_code, fmt.max_code,
                    *softmax_delta.kernel_args(), fmt.scale, fmt.q_f)
    return logp, LnsArray(pc, ps, fmt)


def ce_grad_init(p: LnsVector, label: int, d: DeltaApproximator) -> LnsVector:
    """delta_j = P_j (-) onehot_j for the cross-entropy/softmax output."""
    n = p.shape[0]
    if not 0 <= label < n:
        raise ValueError(f"label {label} out of range for {n} classes")
    fmt = p.fmt
    out = LnsArray.zeros((n,), fmt)
    K.k_ce_grad(p.codes, p.signs, label, out.codes, out.signs,
                fmt.zero_code, fmt.max_code,
                *d.kernel_args(), fmt.scale, fmt.q_f)
    return out


# ---------------------------------------------------------------------------
# weight initialization

def glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def draw_weight_log_mags(fan_in: int, fan_out: int,
                         rng: Xoshiro256StarStar) -> tuple[np.ndarray, np.ndarray]:
    """(signs, X) with sign ~ Bernoulli(1/2) and |w| = 2**X ~ Uniform(0, a],
    a the Glorot bound, realized directly in the log domain as
    X = log2(a) + log2(u)."""
    n = fan_in * fan_out
    signs = rng.bits(n)
    u = rng.uniform(n)
    x = math.log2(glorot_bound(fan_in, fan_out)) + np.log2(u)
    return signs.reshape(fan_out, fan_in), x.reshape(fan_out, fan_in)


def init_weights(fan_in: int, fan_out: int, seed_or_rng,
                 fmt: LnsFormat) -> LnsMatrix:
    rng = (seed_or_rng if isinstance(seed_or_rng, Xoshiro256StarStar)
           else Xoshiro256StarStar(seed_or_rng))
    signs, x = draw_weight_log_mags(fan_in, fan_out, rng)
    codes = np.rint(x * fmt.scale).astype(np.int64)
    codes = np.minimum(codes, fmt.max_code)
    flush = codes < fmt.min_code
    codes[flush] = fmt.zero_code
    s = np.where(signs == 1, SIGN_POS, SIGN_NEG).astype(np.uint8)
    s[flush] = SIGN_POS
    return LnsArray(codes, s, fmt)


def _init_float_weights(fan_in: int, fan_out: int,
                        rng: Xoshiro256StarStar) -> np.ndarray:
    signs, x = draw_weight_log_mags(fan_in, fan_out, rng)
    return np.where(signs == 1, 1.0, -1.0) * 2.0**x


# ---------------------------------------------------------------------------
# models

class LnsMlp:
    backend = "lns"

    def __init__(self, dims: list[int], cfg: TrainConfig,
                 rng: Xoshiro256StarStar | None = None):
        fmt = cfg.lns_fmt
        self.fmt = fmt
        self.cfg = cfg
        self.dims = list(dims)
        rng = rng or Xoshiro256StarStar(cfg.seed)
        self.weights: list[LnsMatrix] = []
        self.biases: list[LnsVector] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            self.weights.append(init_weights(fan_in, fan_out, rng, fmt))
            self.biases.append(LnsArray.zeros((fan_out,), fmt))
        self.approx = cfg.general_approximator()
        self.softmax_approx = cfg.softmax_approximator()
        self.pow2 = Pow2FracTable(cfg.pow2_size)
        self.a_fmt = activation_fixed_format(fmt)
        self.beta_code = round_half_even(cfg.beta * fmt.scale)
        # lr/batch folded into one log constant; gradients are summed over
        # the mini-batch, not averaged
        self.lr_code, _ = _encode_const(cfg.learning_rate / cfg.batch_size, fmt)
        self.lam_code, _ = _encode_const(cfg.weight_decay, fmt)
        self._args = ((fmt.zero_code, fmt.max_code) + self.approx.kernel_args()
                      + (fmt.scale, fmt.q_f))
        self._gw = [LnsArray.zeros(w.shape, fmt) for w in self.weights]
        self._gb = [LnsArray.zeros(b.shape, fmt) for b in self.biases]

    # -- forward -----------------------------------------------------------

    def forward_sample(self, xc: np.ndarray, xs: np.ndarray):
        fmt = self.fmt
        acts = []  # per layer: (pre codes, pre signs, post codes, post signs)
        cc, cs = xc, xs
        n_layers = len(self.weights)
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            zc = np.empty(w.shape[0], dtype=np.int64)
            zs = np.empty(w.shape[0], dtype=np.uint8)
            K.k_gemv(w.codes, w.signs, cc, cs, b.codes, b.signs, zc, zs,
                     *self._args)
            if li < n_layers - 1:
                ac = np.empty_like(zc)
                asg = np.empty_like(zs)
                K.k_llrelu(zc, zs, self.beta_code, ac, asg, fmt.zero_code)
            else:
                ac, asg = zc, zs
            acts.append((zc, zs, ac, asg))
            cc, cs = ac, asg
        return acts

    def predict(self, codes: np.ndarray, signs: np.ndarray) -> np.ndarray:
        n = codes.shape[0]
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            acts = self.forward_sample(codes[i], signs[i])
            zc, zs, _, _ = acts[-1]
            out[i] = K.k_argmax_value(zc, zs, self.fmt.zero_code, self.fmt.scale)
        return out

    def log_probs(self, xc: np.ndarray, xs: np.ndarray) -> np.ndarray:
        acts = self.forward_sample(xc, xs)
        zc, zs, _, _ = acts[-1]
        logp, _ = log_softmax(LnsArray(zc, zs, self.fmt),
                              self.softmax_approx, self.pow2)
        return logp / self.fmt.scale

    # -- backward ----------------------------------------------------------

    def _backward_sample(self, xc, xs, acts, label: int):
        fmt = self.fmt
        zc, zs, _, _ = acts[-1]
        _, p = log_softmax(LnsArray(zc, zs, fmt), self.softmax_approx, self.pow2)
        dc = np.empty_like(p.codes)
        ds = np.empty_like(p.signs)
        K.k_ce_grad(p.codes, p.signs, label, dc, ds, *self._args)
        for li in range(len(self.weights) - 1, -1, -1):
            below_c, below_s = (xc, xs) if li == 0 else (acts[li - 1][2], acts[li - 1][3])
            K.k_acc_outer(self._gw[li].codes, self._gw[li].signs,
                          dc, ds, below_c, below_s, *self._args)
            K.k_acc_vec(self._gb[li].codes, self._gb[li].signs, dc, ds,
                        *self._args)
            if li > 0:
                w = self.weights[li]
                nc = np.empty(w.shape[1], dtype=np.int64)
                ns = np.empty(w.shape[1], dtype=np.uint8)
                K.k_gemv_t(w.codes, w.signs, dc, ds, nc, ns, *self._args)
                K.k_llrelu_bwd(nc, ns, acts[li - 1][1], self.beta_code,
                               fmt.zero_code)
                dc, ds = nc, ns

    def train_batch(self, codes: np.ndarray, signs: np.ndarray,
                    labels: np.ndarray) -> None:
        for g in self._gw:
            g.fill_zero()
        for g in self._gb:
            g.fill_zero()
        for i in range(codes.shape[0]):
            acts = self.forward_sample(codes[i], signs[i])
            self._backward_sample(codes[i], signs[i], acts, int(labels[i]))
        self.apply_grads()

    def grads(self) -> list[np.ndarray]:
        """Decoded accumulated gradients (weights then biases per layer)."""
        out = []
        for gw, gb in zip(self._gw, self._gb):
            out.append(gw.to_values())
            out.append(gb.to_values())
        return out

    def apply_grads(self) -> None:
        for w, g in zip(self.weights + self.biases, self._gw + self._gb):
            K.k_sgd(w.codes.reshape(-1), w.signs.reshape(-1),
                    g.codes.reshape(-1), g.signs.reshape(-1),
                    self.lam_code, self.lr_code, *self._args)

    def params_float(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w.to_values())
            out.append(b.to_values())
        return out


class FloatMlp:
    backend = "float"

    def __init__(self, dims: list[int], cfg: TrainConfig,
                 rng: Xoshiro256StarStar | None = None):
        self.cfg = cfg
        self.dims = list(dims)
        rng = rng or Xoshiro256StarStar(cfg.seed)
        self.weights = [_init_float_weights(i, o, rng)
                        for i, o in zip(dims[:-1], dims[1:])]
        self.biases = [np.zeros(o) for o in dims[1:]]
        self.slope = 2.0 ** cfg.beta

    def _forward(self, x: np.ndarray):
        acts = []
        cur = x
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = cur @ w.T + b
            a = np.where(z >= 0, z, self.slope * z) if li < len(self.weights) - 1 else z
            acts.append((z, a))
            cur = a
        return acts

    @staticmethod
    def _softmax(z: np.ndarray) -> np.ndarray:
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self._forward(x)[-1][0], axis=-1)

    def loss(self, x: np.ndarray, labels: np.ndarray) -> float:
        """Summed cross-entropy (natural log) over the batch."""
        p = self._softmax(self._forward(np.atleast_2d(x))[-1][0])
        labels = np.atleast_1d(labels)
        return float(-np.sum(np.log(p[np.arange(labels.size), labels])))

    def batch_grads(self, x: np.ndarray, labels: np.ndarray) -> list[np.ndarray]:
        x = np.atleast_2d(x)
        labels = np.atleast_1d(labels)
        acts = self._forward(x)
        p = self._softmax(acts[-1][0])
        d = p.copy()
        d[np.arange(labels.size), labels] -= 1.0
        grads: list[np.ndarray] = []
        for li in range(len(self.weights) - 1, -1, -1):
            below = x if li == 0 else acts[li - 1][1]
            grads.insert(0, d.sum(axis=0))
            grads.insert(0, d.T @ below)
            if li > 0:
                d = d @ self.weights[li]
                d = np.where(acts[li - 1][0] >= 0, d, self.slope * d)
        return grads

    def train_batch(self, x: np.ndarray, labels: np.ndarray) -> None:
        grads = self.batch_grads(x, labels)
        lr = self.cfg.learning_rate / self.cfg.batch_size
        lam = self.cfg.weight_decay
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        for p, g in zip(params, grads):
            p -= lr * (g + lam * p)

    def params_float(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w.copy())
            out.append(b.copy())
        return out


class FixedMlp:
    """Linear-domain fixed-point baseline.  Matrix products use an exact
    wide accumulator, rounded/saturated once per dot product; the softmax
    and its gradient seed are computed in float on decoded activations
    (offline-style preprocessing, like the dataset conversion)."""

    backend = "fixed"

    def __init__(self, dims: list[int], cfg: TrainConfig,
                 rng: Xoshiro256StarStar | None = None):
        fmt = cfg.fixed_fmt
        self.fmt = fmt
        self.cfg = cfg
        self.dims = list(dims)
        rng = rng or Xoshiro256StarStar(cfg.seed)
        self.weights = [fx_encode_array(_init_float_weights(i, o, rng), fmt)
                        for i, o in zip(dims[:-1], dims[1:])]
        self.biases = [np.zeros(o, dtype=np.int64) for o in dims[1:]]
        self.slope_code = round_half_even(2.0 ** cfg.beta * fmt.scale)
        self.lr_code = round_half_even(cfg.learning_rate / cfg.batch_size * fmt.scale)
        self.lam_code = round_half_even(cfg.weight_decay * fmt.scale)

    def _sat(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.fmt.min_code, self.fmt.max_code)

    def _matmul(self, x: np.ndarray, w_t: np.ndarray) -> np.ndarray:
        return self._sat(rne_shift_right_array(x @ w_t, self.fmt.b_f))

    def _leaky(self, z: np.ndarray) -> np.ndarray:
        neg = rne_shift_right_array(z * self.slope_code, self.fmt.b_f)
        return np.where(z >= 0, z, self._sat(neg))

    def _forward(self, x: np.ndarray):
        acts = []
        cur = x
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = self._sat(self._matmul(cur, w.T) + b)
            a = self._leaky(z) if li < len(self.weights) - 1 else z
            acts.append((z, a))
            cur = a
        return acts

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self._forward(x)[-1][0], axis=-1)

    def train_batch(self, x: np.ndarray, labels: np.ndarray) -> None:
        fmt = self.fmt
        acts = self._forward(x)
        zf = fx_decode_array(acts[-1][0], fmt)
        p = FloatMlp._softmax(zf)
        d_f = p
        d_f[np.arange(labels.size), labels] -= 1.0
        d = fx_encode_array(d_f, fmt)
        grads: list[np.ndarray] = []
        for li in range(len(self.weights) - 1, -1, -1):
            below = x if li == 0 else acts[li - 1][1]
            grads.insert(0, self._sat(d.sum(axis=0)))
            grads.insert(0, self._sat(rne_shift_right_array(d.T @ below, fmt.b_f)))
            if li > 0:
                d = self._matmul(d, self.weights[li])
                neg = rne_shift_right_array(d * self.slope_code, fmt.b_f)
                d = np.where(acts[li - 1][0] >= 0, d, self._sat(neg))
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        for prm, g in zip(params, grads):
            decay = rne_shift_right_array(self.lam_code * prm, fmt.b_f)
            gp = self._sat(g + decay)
            step = rne_shift_right_array(self.lr_code * gp, fmt.b_f)
            prm[...] = self._sat(prm - step)

    def params_float(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(fx_decode_array(w, self.fmt))
            out.append(fx_decode_array(b, self.fmt))
        return out


def _encode_const(v: float, fmt: LnsFormat) -> tuple[int, int]:
    if v == 0.0:
        return fmt.zero_code, SIGN_POS
    code = round_half_even(math.log2(abs(v)) * fmt.scale)
    if code < fmt.min_code:
        return fmt.zero_code, SIGN_POS
    return min(code, fmt.max_code), SIGN_POS if v > 0 else SIGN_NEG


MODEL_CLASSES = {"lns": LnsMlp, "fixed": FixedMlp, "float": FloatMlp}


def build_model(dims: list[int], cfg: TrainConfig,
                rng: Xoshiro256StarStar | None = None):
    try:
        cls = MODEL_CLASSES[cfg.backend]
    except KeyError:
        raise ValueError(f"unknown backend {cfg.backend!r}") from None
    return cls(dims, cfg, rng)
