"""Jitted integer kernels for log-domain arithmetic.

Everything operates on int64 grid codes plus uint8 signs (1 = positive).
The canonical zero is the format's most negative code (`zero_code`); the
delta evaluator signals the "most negative number" case with SENTINEL and
the adder maps it to canonical zero.

Approximator arguments are always the 5-tuple produced by
DeltaApproximator.kernel_args(): (mode, lut_plus, lut_minus, r_code,
dmax_code); format arguments are (zero_code, max_code, scale, qf).
"""

import math

import numpy as np
from numba import njit

SENTINEL = -(1 << 62)

MODE_EXACT = 0
MODE_LUT = 1
MODE_BITSHIFT = 2
MODE_DIRECT = 3  # tables indexed by d_code itself (materialized fast path)


@njit(cache=True, inline='always')
def rne(x):
    """Round half to even, float -> int64."""
    return np.int64(np.rint(x))


@njit(cache=True, inline='always')
def rne_shr(p, sh):
    """Arithmetic right shift with round-half-to-even."""
    if sh <= 0:
        return p << (-sh)
    q = p >> sh
    r = p - (q << sh)
    half = np.int64(1) << (sh - 1)
    if r > half or (r == half and (q & 1) != 0):
        q += 1
    return q


@njit(cache=True, inline='always')
def delta_code(d_code, plus_branch, mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """Grid code of delta_plus/delta_minus at d = d_code/scale.
    Returns SENTINEL for the delta_minus(0) case."""
    if mode == MODE_DIRECT:
        if d_code >= lutp.size:
            return np.int64(0)
        return lutp[d_code] if plus_branch else lutm[d_code]
    if mode == MODE_LUT:
        if d_code >= dmax_code:
            return np.int64(0)
        k = rne(d_code / r_code)
        if k >= lutp.size:
            k = lutp.size - 1
        return lutp[k] if plus_branch else lutm[k]
    if mode == MODE_BITSHIFT:
        n = rne(d_code / scale)
        e = qf - n
        if plus_branch:
            return np.int64(1) << e if e >= 0 else rne(2.0 ** np.float64(e))
        if n == 0:
            return np.int64(SENTINEL)
        return -(np.int64(3) << (e - 1)) if e >= 1 else -rne(1.5 * 2.0 ** np.float64(e))
    # exact
    d = d_code / scale
    if plus_branch:
        return rne(math.log2(1.0 + 2.0 ** (-d)) * scale)
    if d_code == 0:
        return np.int64(SENTINEL)
    return rne(math.log2(1.0 - 2.0 ** (-d)) * scale)


@njit(cache=True)
def k_build_direct(mode, lutp, lutm, r_code, dmax_code, scale, qf, out_p, out_m):
    """Materialize delta codes for every on-grid d, via the evaluator
    itself so the fast path is bit-identical to the generic one."""
    for d in range(out_p.size):
        out_p[d] = delta_code(d, True, mode, lutp, lutm, r_code, dmax_code, scale, qf)
        out_m[d] = delta_code(d, False, mode, lutp, lutm, r_code, dmax_code, scale, qf)


@njit(cache=True, inline='always')
def mul_code(cx, sx, cy, sy, zero_code, max_code):
    if cx == zero_code or cy == zero_code:
        return zero_code, np.int64(1)
    z = cx + cy
    if z > max_code:
        z = max_code
    elif z <= zero_code:
        return zero_code, np.int64(1)
    s = np.int64(1) if sx == sy else np.int64(0)
    return z, s


@njit(cache=True, inline='always')
def add_code(cx, sx, cy, sy, zero_code, max_code,
             mode, lutp, lutm, r_code, dmax_code, scale, qf):
    if cx == zero_code:
        return cy, np.int64(sy)
    if cy == zero_code:
        return cx, np.int64(sx)
    if cx >= cy:
        mx = cx
        sz = np.int64(sx)
        d = cx - cy
    else:
        mx = cy
        sz = np.int64(sy)
        d = cy - cx
    delta = delta_code(d, sx == sy, mode, lutp, lutm, r_code, dmax_code, scale, qf)
    if delta <= SENTINEL:
        return zero_code, np.int64(1)
    z = mx + delta
    if z > max_code:
        z = max_code
    elif z <= zero_code:
        return zero_code, np.int64(1)
    return z, sz


@njit(cache=True)
def k_ew_mul(ca, sa, cb, sb, oc, os, zero_code, max_code):
    for i in range(ca.size):
        c, s = mul_code(ca[i], sa[i], cb[i], sb[i], zero_code, max_code)
        oc[i] = c
        os[i] = np.uint8(s)


@njit(cache=True)
def k_ew_add(ca, sa, cb, sb, oc, os, zero_code, max_code,
             mode, lutp, lutm, r_code, dmax_code, scale, qf):
    for i in range(ca.size):
        c, s = add_code(ca[i], sa[i], cb[i], sb[i], zero_code, max_code,
                        mode, lutp, lutm, r_code, dmax_code, scale, qf)
        oc[i] = c
        os[i] = np.uint8(s)


@njit(cache=True)
def k_gemv(cw, sw, cx, sx, cb, sb, oc, os, zero_code, max_code,
           mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """Z_i = (fold_j W_ij (*) X_j) (+) B_i, fold ascending j, bias last."""
    m, n = cw.shape
    for i in range(m):
        acc_c = zero_code
        acc_s = np.int64(1)
        for j in range(n):
            pc, ps = mul_code(cw[i, j], sw[i, j], cx[j], sx[j], zero_code, max_code)
            acc_c, acc_s = add_code(acc_c, acc_s, pc, ps, zero_code, max_code,
                                    mode, lutp, lutm, r_code, dmax_code, scale, qf)
        acc_c, acc_s = add_code(acc_c, acc_s, cb[i], sb[i], zero_code, max_code,
                                mode, lutp, lutm, r_code, dmax_code, scale, qf)
        oc[i] = acc_c
        os[i] = np.uint8(acc_s)


@njit(cache=True)
def k_gemv_t(cw, sw, cd, sd, oc, os, zero_code, max_code,
             mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """out_j = fold_i W_ij (*) D_i, fold ascending i (no bias)."""
    m, n = cw.shape
    for j in range(n):
        acc_c = zero_code
        acc_s = np.int64(1)
        for i in range(m):
            pc, ps = mul_code(cw[i, j], sw[i, j], cd[i], sd[i], zero_code, max_code)
            acc_c, acc_s = add_code(acc_c, acc_s, pc, ps, zero_code, max_code,
                                    mode, lutp, lutm, r_code, dmax_code, scale, qf)
        oc[j] = acc_c
        os[j] = np.uint8(acc_s)


@njit(cache=True)
def k_outer(cu, su, cv, sv, oc, os, zero_code, max_code):
    m = cu.size
    n = cv.size
    for i in range(m):
        for j in range(n):
            c, s = mul_code(cu[i], su[i], cv[j], sv[j], zero_code, max_code)
            oc[i, j] = c
            os[i, j] = np.uint8(s)


@njit(cache=True)
def k_acc_outer(gc, gs, cu, su, cv, sv, zero_code, max_code,
                mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """g (+)= u outer v, fused to avoid a temporary."""
    m = cu.size
    n = cv.size
    for i in range(m):
        for j in range(n):
            pc, ps = mul_code(cu[i], su[i], cv[j], sv[j], zero_code, max_code)
            c, s = add_code(gc[i, j], gs[i, j], pc, ps, zero_code, max_code,
                            mode, lutp, lutm, r_code, dmax_code, scale, qf)
            gc[i, j] = c
            gs[i, j] = np.uint8(s)


@njit(cache=True)
def k_acc_vec(gc, gs, cd, sd, zero_code, max_code,
              mode, lutp, lutm, r_code, dmax_code, scale, qf):
    for i in range(gc.size):
        c, s = add_code(gc[i], gs[i], cd[i], sd[i], zero_code, max_code,
                        mode, lutp, lutm, r_code, dmax_code, scale, qf)
        gc[i] = c
        gs[i] = np.uint8(s)


@njit(cache=True)
def k_fold_add(c, s, zero_code, max_code,
               mode, lutp, lutm, r_code, dmax_code, scale, qf):
    acc_c = zero_code
    acc_s = np.int64(1)
    for i in range(c.size):
        acc_c, acc_s = add_code(acc_c, acc_s, c[i], s[i], zero_code, max_code,
                                mode, lutp, lutm, r_code, dmax_code, scale, qf)
    return acc_c, acc_s


@njit(cache=True)
def k_llrelu(c, s, beta_code, oc, os, zero_code):
    for i in range(c.size):
        if c[i] == zero_code or s[i] == 1:
            oc[i] = c[i]
            os[i] = s[i]
        else:
            nc = c[i] + beta_code
            if nc <= zero_code:
                oc[i] = zero_code
                os[i] = np.uint8(1)
            else:
                oc[i] = nc
                os[i] = np.uint8(0)


@njit(cache=True)
def k_llrelu_bwd(dc, ds, pre_s, beta_code, zero_code):
    """In place: multiply deltas by the activation derivative (1 where the
    pre-activation sign is positive, 2**beta where negative)."""
    for i in range(dc.size):
        if pre_s[i] == 0 and dc[i] != zero_code:
            nc = dc[i] + beta_code
            if nc <= zero_code:
                dc[i] = zero_code
                ds[i] = np.uint8(1)
            else:
                dc[i] = nc


@njit(cache=True)
def k_sgd(wc, ws, gc, gs, lam_code, lr_code, zero_code, max_code,
          mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """w <- w (-) lr (*) (g (+) lam (*) w), flattened views."""
    one = np.int64(1)
    for i in range(wc.size):
        lw_c, lw_s = mul_code(lam_code, one, wc[i], np.int64(ws[i]), zero_code, max_code)
        gp_c, gp_s = add_code(gc[i], gs[i], lw_c, lw_s, zero_code, max_code,
                              mode, lutp, lutm, r_code, dmax_code, scale, qf)
        st_c, st_s = mul_code(lr_code, one, gp_c, gp_s, zero_code, max_code)
        if st_c != zero_code:
            st_s = one - st_s
        c, s = add_code(wc[i], ws[i], st_c, st_s, zero_code, max_code,
                        mode, lutp, lutm, r_code, dmax_code, scale, qf)
        wc[i] = c
        ws[i] = np.uint8(s)


@njit(cache=True)
def k_fill_zero(c, s, zero_code):
    for i in range(c.size):
        c[i] = zero_code
        s[i] = np.uint8(1)


@njit(cache=True)
def k_lns_to_fixed(zc, zs, pow2, out, out_bf, a_min, a_max, zero_code, scale):
    """Vector lns -> linear fixed codes via the 2**F fraction table."""
    n_tab = pow2.size
    for j in range(zc.size):
        if zc[j] == zero_code:
            out[j] = 0
            continue
        x = zc[j] / scale
        ip = math.floor(x)
        k = rne((x - ip) * n_tab)
        if k == n_tab:
            ip += 1
            k = 0
        val = pow2[k] * 2.0 ** ip
        a = rne(val * 2.0 ** np.float64(out_bf))
        if a > a_max:
            a = a_max
        elif a < a_min:
            a = a_min
        out[j] = a if zs[j] == 1 else -a


@njit(cache=True)
def k_log_softmax(zc, zs, pow2, log2e_code, a_bf, a_min, a_max,
                  out_logp, out_pc, out_ps, zero_code, max_code,
                  mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """Log-domain softmax: a_j = linear(z_j), t_j = a_j*log2(e), shifted by
    max for range, normalizer = fold (+) over (t_j, +); log2 p = t - norm.
    Requires a_bf == qf so t codes live on the log grid."""
    n = zc.size
    t = np.empty(n, dtype=np.int64)
    a = np.empty(n, dtype=np.int64)
    k_lns_to_fixed(zc, zs, pow2, a, a_bf, a_min, a_max, zero_code, scale)
    for j in range(n):
        v = rne_shr(a[j] * log2e_code, a_bf)
        if v > a_max:
            v = a_max
        elif v < a_min:
            v = a_min
        t[j] = v
    tmax = t[0]
    for j in range(1, n):
        if t[j] > tmax:
            tmax = t[j]
    acc_c = zero_code
    acc_s = np.int64(1)
    one = np.int64(1)
    for j in range(n):
        t[j] -= tmax
        if t[j] > zero_code:
            acc_c, acc_s = add_code(acc_c, acc_s, t[j], one, zero_code, max_code,
                                    mode, lutp, lutm, r_code, dmax_code, scale, qf)
    norm = acc_c
    for j in range(n):
        lp = t[j] - norm
        out_logp[j] = lp
        if lp > zero_code:
            out_pc[j] = lp
            out_ps[j] = np.uint8(1)
        else:
            out_pc[j] = zero_code
            out_ps[j] = np.uint8(1)
    return norm


@njit(cache=True)
def k_ce_grad(pc, ps, label, oc, os, zero_code, max_code,
              mode, lutp, lutm, r_code, dmax_code, scale, qf):
    """delta_j = P_j (-) onehot_j; onehot at the label is one = (0, +)."""
    for j in range(pc.size):
        if j == label:
            # subtracting one == adding (code 0, negative sign)
            c, s = add_code(pc[j], ps[j], np.int64(0), np.int64(0),
                            zero_code, max_code,
                            mode, lutp, lutm, r_code, dmax_code, scale, qf)
            oc[j] = c
            os[j] = np.uint8(s)
        else:
            oc[j] = pc[j]
            os[j] = ps[j]


@njit(cache=True)
def k_argmax_value(c, s, zero_code, scale):
    """Index of the largest decoded value (first one on ties)."""
    best = 0
    best_v = -math.inf
    for i in range(c.size):
        if c[i] == zero_code:
            v = 0.0
        else:
            v = 2.0 ** (c[i] / scale)
            if s[i] == 0:
                v = -v
        if v > best_v:
            best_v = v
            best = i
    return best
