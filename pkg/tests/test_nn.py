import math

import numpy as np
import pytest
from scipy import stats

from lognn import (DeltaApproximator, LnsArray, LnsFormat, LnsScalar,
                   TrainConfig, build_model, ce_grad_init, encode,
                   init_weights, llrelu, llrelu_deriv_logmul, lns_zero,
                   log_softmax)
from lognn.nn import (FloatMlp, LnsMlp, draw_weight_log_mags, glorot_bound)
from lognn.ops import Pow2FracTable
from lognn.rng import Xoshiro256StarStar

FMT = LnsFormat(4, 10)
EXACT = DeltaApproximator.exact(FMT)
BETA = -7.0


class TestLlRelu:
    def test_positive_passthrough(self):
        a = encode(3.0, FMT)
        out = llrelu(a, BETA)
        assert (out.code, out.sign) == (a.code, a.sign)

    def test_negative_scaled_by_leak(self):
        out = llrelu(encode(-2.0, FMT), BETA)
        assert out.sign == 0
        assert out.log_mag == 1.0 + BETA  # X + beta

    def test_zero_passthrough(self):
        assert llrelu(lns_zero(FMT), BETA).is_zero

    def test_underflow_flushes(self):
        tiny = LnsScalar(FMT.min_code + 2, 0, FMT)
        assert llrelu(tiny, BETA).is_zero

    def test_nonnegative_beta_rejected(self):
        with pytest.raises(ValueError):
            llrelu(encode(1.0, FMT), 0.0)

    def test_deriv_positive_preactivation_identity(self):
        d = encode(-0.75, FMT)
        out = llrelu_deriv_logmul(d, 1, BETA)
        assert (out.code, out.sign) == (d.code, d.sign)

    def test_deriv_negative_preactivation_scales(self):
        d = encode(4.0, FMT)
        out = llrelu_deriv_logmul(d, 0, BETA)
        assert out.log_mag == 2.0 + BETA
        assert out.sign == d.sign


def _fine_cfg(**kw):
    base = dict(lns_fmt=LnsFormat(4, 20), approx="exact",
                softmax_approx="exact", pow2_size=4096)
    base.update(kw)
    return TrainConfig(**base)


class TestLogSoftmax:
    def setup_method(self):
        self.fmt = LnsFormat(4, 20)
        self.sm = DeltaApproximator.exact(self.fmt)
        self.pow2 = Pow2FracTable(4096)

    def _run(self, values):
        z = LnsArray.from_values(np.asarray(values, dtype=np.float64), self.fmt)
        logp, p = log_softmax(z, self.sm, self.pow2)
        return logp / self.fmt.scale, p.to_values()

    def test_equal_logits_uniform(self):
        logp, p = self._run([1.5, 1.5])
        assert np.allclose(logp, [-1.0, -1.0], atol=2.0 ** -8)
        assert np.allclose(p, [0.5, 0.5], atol=2.0 ** -8)

    def test_dominating_logit(self):
        logp, p = self._run([8.0, -8.0])
        assert p[0] > 0.999 and p[1] < 1e-4
        assert logp[0] > -1e-3

    def test_three_way_matches_float(self):
        values = [1.2, -0.4, 0.1]
        logp, p = self._run(values)
        z = np.array(values)
        ref = np.exp(z - z.max())
        ref /= ref.sum()
        assert np.allclose(p, ref, atol=2.0 ** -8)
        assert np.allclose(logp, np.log2(ref), atol=2.0 ** -8)

    def test_normalization(self):
        _, p = self._run([0.3, -2.0, 1.1, 0.0, -0.7])
        assert abs(p.sum() - 1.0) <= 2.0 ** -6

    def test_invariant_to_shift(self):
        # softmax(z) == softmax(z + c); the max-subtraction makes this
        # nearly exact on the grid
        _, p1 = self._run([1.0, 2.0, 0.5])
        _, p2 = self._run([3.0, 4.0, 2.5])
        assert np.allclose(p1, p2, atol=2.0 ** -8)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            self._run([1.0])

    def test_zero_logit_handled(self):
        _, p = self._run([0.0, 1.0])
        ref = np.exp([0.0, 1.0])
        ref /= ref.sum()
        assert np.allclose(p, ref, atol=2.0 ** -7)


class TestCeGrad:
    def test_probability_minus_onehot(self):
        p = LnsArray.from_values(np.array([0.5, 0.3, 0.2]), FMT)
        g = ce_grad_init(p, 0, EXACT)
        # 0.5 (-) 1 = -0.5 at the label, P_j elsewhere
        assert np.allclose(g.to_values(), [-0.5, 0.3, 0.2], atol=2e-3)

    def test_perfect_prediction_zero_grad(self):
        p = LnsArray.from_values(np.array([1.0, 0.0]), FMT)
        g = ce_grad_init(p, 0, EXACT)
        assert np.allclose(g.to_values(), [0.0, 0.0])

    def test_label_out_of_range(self):
        p = LnsArray.from_values(np.array([0.5, 0.5]), FMT)
        with pytest.raises(ValueError):
            ce_grad_init(p, 2, EXACT)


class TestInit:
    def test_sign_frequency(self):
        signs, _ = draw_weight_log_mags(784, 100, Xoshiro256StarStar(1))
        n = signs.size
        # Bernoulli(1/2): 3 sigma around n/2
        assert abs(signs.sum() - n / 2) < 3 * math.sqrt(n / 4)

    def test_magnitudes_within_glorot_bound(self):
        _, x = draw_weight_log_mags(784, 100, Xoshiro256StarStar(1))
        a = glorot_bound(784, 100)
        assert np.all(2.0 ** x <= a + 1e-12)
        assert np.all(np.isfinite(x))

    def test_magnitude_distribution_uniform(self):
        _, x = draw_weight_log_mags(200, 100, Xoshiro256StarStar(11))
        a = glorot_bound(200, 100)
        u = (2.0 ** x.ravel()) / a
        assert stats.kstest(u, "uniform").pvalue > 0.01

    def test_encoded_weights_bounded(self):
        w = init_weights(784, 100, 1, FMT)
        a = glorot_bound(784, 100)
        vals = np.abs(w.to_values())
        assert np.all(vals <= a * (1 + 2.0 ** -FMT.q_f))

    def test_shared_stream_matches_float_init(self):
        fmt = LnsFormat(4, 20)
        w_log = init_weights(20, 10, Xoshiro256StarStar(3), fmt)
        from lognn.nn import _init_float_weights
        w_f = _init_float_weights(20, 10, Xoshiro256StarStar(3))
        assert np.allclose(w_log.to_values(), w_f, rtol=2e-6, atol=1e-9)


def _float_loss(params, x, labels, dims, slope):
    """Reference loss on explicit parameter arrays (weights/biases
    alternating per layer), summed natural-log cross-entropy."""
    cur = np.atleast_2d(x)
    n_layers = len(dims) - 1
    for li in range(n_layers):
        w, b = params[2 * li], params[2 * li + 1]
        z = cur @ w.T + b
        cur = np.where(z >= 0, z, slope * z) if li < n_layers - 1 else z
    e = np.exp(cur - cur.max(axis=-1, keepdims=True))
    p = e / e.sum(axis=-1, keepdims=True)
    labels = np.atleast_1d(labels)
    return float(-np.sum(np.log(p[np.arange(labels.size), labels])))


class TestGradientCheck:
    def test_log_domain_gradient_matches_finite_differences(self):
        """Analytic log-domain backprop on a 2-8-3 net at q_f = 20 with exact
        correction terms, against central finite differences of the float
        loss at the decoded parameters."""
        dims = [2, 8, 3]
        cfg = _fine_cfg(hidden=8, batch_size=3)
        model = LnsMlp(dims, cfg)
        rng = np.random.default_rng(0)
        xv = rng.uniform(-1, 1, size=(3, 2))
        labels = np.array([0, 2, 1])

        from lognn.lnsformat import encode_array
        xc, xs = encode_array(xv, cfg.lns_fmt)
        for g in model._gw + model._gb:
            g.fill_zero()
        for i in range(3):
            acts = model.forward_sample(xc[i], xs[i])
            model._backward_sample(xc[i], xs[i], acts, int(labels[i]))
        analytic = model.grads()

        params = model.params_float()
        slope = 2.0 ** cfg.beta
        h = 1e-5
        checked = 0
        for pi, p in enumerate(params):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                g = analytic[pi][idx]
                if abs(g) <= 1e-4:
                    continue
                orig = p[idx]
                p[idx] = orig + h
                up = _float_loss(params, xv, labels, dims, slope)
                p[idx] = orig - h
                dn = _float_loss(params, xv, labels, dims, slope)
                p[idx] = orig
                fd = (up - dn) / (2 * h)
                assert abs(g - fd) <= 1e-2 * max(abs(fd), 1e-4), (pi, idx, g, fd)
                checked += 1
        assert checked > 30


class TestBackendAgreement:
    def test_one_step_matches_float(self):
        dims = [4, 6, 3]
        cfg = _fine_cfg(batch_size=2, hidden=6)
        lns = LnsMlp(dims, cfg)
        flt = FloatMlp(dims, cfg)
        rng = np.random.default_rng(1)
        xv = rng.uniform(-1, 1, size=(2, 4))
        labels = np.array([1, 2])

        for a, b in zip(lns.params_float(), flt.params_float()):
            assert np.allclose(a, b, rtol=2e-6, atol=1e-9)

        from lognn.lnsformat import encode_array
        xc, xs = encode_array(xv, cfg.lns_fmt)
        lns.train_batch(xc, xs, labels)
        flt.train_batch(xv, labels)
        for a, b in zip(lns.params_float(), flt.params_float()):
            assert np.allclose(a, b, rtol=1e-3, atol=1e-5)

    def test_predictions_agree_at_init(self):
        dims = [4, 6, 3]
        cfg = _fine_cfg(hidden=6)
        lns = LnsMlp(dims, cfg)
        flt = FloatMlp(dims, cfg)
        rng = np.random.default_rng(2)
        xv = rng.uniform(-1, 1, size=(16, 4))
        from lognn.lnsformat import encode_array
        xc, xs = encode_array(xv, cfg.lns_fmt)
        assert np.array_equal(lns.predict(xc, xs), flt.predict(xv))


class TestTrainingDynamics:
    def test_loss_decreases_on_separable_problem(self):
        dims = [2, 8, 2]
        cfg = TrainConfig(hidden=8, learning_rate=0.05, batch_size=4,
                          weight_decay=0.0)
        model = LnsMlp(dims, cfg)
        rng = np.random.default_rng(4)
        xv = np.concatenate([rng.normal(1.0, 0.3, size=(20, 2)),
                             rng.normal(-1.0, 0.3, size=(20, 2))])
        labels = np.repeat([0, 1], 20)
        from lognn.lnsformat import encode_array
        xc, xs = encode_array(xv, cfg.lns_fmt)

        def mean_loss():
            tot = 0.0
            for i in range(40):
                logp = model.log_probs(xc[i], xs[i])
                tot += -logp[labels[i]]
            return tot / 40

        before = mean_loss()
        order = np.arange(40)
        for _ in range(10):
            rng.shuffle(order)
            for s in range(0, 40, 4):
                b = order[s:s + 4]
                model.train_batch(xc[b], xs[b], labels[b])
        after = mean_loss()
        assert after < before
        assert np.mean(model.predict(xc, xs) == labels) >= 0.95

    def test_zero_decay_zero_grad_is_noop(self):
        cfg = TrainConfig(weight_decay=0.0, hidden=4)
        model = LnsMlp([3, 4, 2], cfg)
        before = [w.codes.copy() for w in model.weights]
        for g in model._gw + model._gb:
            g.fill_zero()
        model.apply_grads()
        for b, w in zip(before, model.weights):
            assert np.array_equal(b, w.codes)

    def test_training_deterministic(self):
        cfg = TrainConfig(hidden=4, batch_size=2)
        rng = np.random.default_rng(9)
        xv = rng.uniform(-1, 1, size=(6, 3))
        labels = np.array([0, 1, 1, 0, 1, 0])
        from lognn.lnsformat import encode_array
        xc, xs = encode_array(xv, cfg.lns_fmt)
        runs = []
        for _ in range(2):
            m = LnsMlp([3, 4, 2], cfg)
            for s in range(0, 6, 2):
                m.train_batch(xc[s:s + 2], xs[s:s + 2], labels[s:s + 2])
            runs.append([w.codes.copy() for w in m.weights]
                        + [b.codes.copy() for b in m.biases])
        for a, b in zip(*runs):
            assert np.array_equal(a, b)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)

    def test_unknown_backend(self):
        cfg = TrainConfig()
        cfg.backend = "analog"
        with pytest.raises(ValueError):
            build_model([2, 2], cfg)

    def test_build_model_dispatch(self):
        for backend, name in [("lns", "LnsMlp"), ("fixed", "FixedMlp"),
                              ("float", "FloatMlp")]:
            cfg = TrainConfig(backend=backend, hidden=4)
            assert type(build_model([3, 4, 2], cfg)).__name__ == name
