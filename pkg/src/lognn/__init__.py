"""Multiplier-free neural-network training on a fixed-point logarithmic
number system: multiplies are integer adds, adds are max-plus-correction
with the correction term from a small LUT or a bit-shift rule."""

from .delta import (DeltaApproximator, DeltaTable, build_shift_table,
                    build_table, delta_minus, delta_minus_exact, delta_plus,
                    delta_plus_exact, error_profile)
from .fixedpoint import (FixedFormat, FixedScalar, fx_add, fx_encode, fx_mul,
                         fx_sub, required_log_width)
from .lnsformat import LnsFormat, LnsScalar, decode, encode, lns_one, lns_zero
from .nn import (TrainConfig, build_model, ce_grad_init, init_weights,
                 llrelu, llrelu_deriv_logmul, log_softmax)
from .ops import (Pow2FracTable, fixed_to_lns_approx, fixed_to_lns_exact,
                  lns_add, lns_exp_posradix, lns_mul, lns_sub, lns_to_fixed)
from .tensor import (LnsArray, LnsMatrix, LnsVector, accumulate,
                     accumulate_outer, elementwise_add, elementwise_mul,
                     fold_add, gemv, gemv_transpose, outer_product)

__version__ = "0.1.0"
