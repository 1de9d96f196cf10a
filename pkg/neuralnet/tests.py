import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from utils.exceptions import InvalidParams, ShapeMismatch
from .gradcheck import grad_check, relative_error
from .gru import GruParams, gru_sequence_backward, gru_sequence_forward, gru_step
from .layers import (
    ConvParams, DenseParams, activation, activation_backward, activation_forward, conv2d,
    conv2d_backward, conv2d_forward, crop_backward, crop_forward, dense, dense_backward,
    dense_forward, maxpool2, maxpool2_backward, maxpool2_forward, upsample2_backward,
    upsample2_forward,
)
from .losses import bce_backward, bce_loss, kl_backward, kl_diag_gaussian
from .optim import AdamHyper, AdamState, adam_step

SEEDS = range(10)


def identity_kernel(channels=1):
    weight = np.zeros((channels, channels, 3, 3))
    for c in range(channels):
        weight[c, c, 1, 1] = 1.0
    return weight


# ====================================
#  FORWARD CONTRACTS
# ====================================
class ConvTest(SimpleTestCase):
    def test_identity_kernel_returns_input(self):
        x = np.random.default_rng(0).normal(size=(1, 6, 5))
        out = conv2d(x, ConvParams(identity_kernel(), np.zeros(1)))
        npt.assert_array_equal(out, x)

    def test_zero_kernel_gives_bias(self):
        out = conv2d(np.ones((2, 4, 4)), ConvParams(np.zeros((3, 2, 3, 3)), np.array([1.0, -2.0, 0.5])))
        self.assertEqual(out.shape, (3, 4, 4))
        npt.assert_array_equal(out[1], np.full((4, 4), -2.0))

    def test_all_ones_counts_overlaps(self):
        out = conv2d(np.ones((1, 3, 3)), ConvParams(np.ones((1, 1, 3, 3)), np.zeros(1)))
        self.assertEqual(out[0, 1, 1], 9.0)
        self.assertEqual(out[0, 0, 0], 4.0)
        self.assertEqual(out[0, 0, 1], 6.0)

    def test_batched_matches_single(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 2, 5, 4))
        params = ConvParams(rng.normal(size=(4, 2, 3, 3)), rng.normal(size=4))
        batched = conv2d(x, params)
        for n in range(3):
            npt.assert_allclose(batched[n], conv2d(x[n], params))

    def test_channel_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            conv2d(np.ones((2, 4, 4)), ConvParams(np.zeros((1, 3, 3, 3)), np.zeros(1)))

    @hypothesis_settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
    def test_identity_kernel_property(self, channels, height, width, seed):
        x = np.random.default_rng(seed).normal(size=(channels, height, width))
        npt.assert_array_equal(conv2d(x, ConvParams(identity_kernel(channels), np.zeros(channels))), x)


class MaxPoolTest(SimpleTestCase):
    def test_single_patch(self):
        self.assertEqual(maxpool2(np.array([[[1.0, 2.0], [3.0, 4.0]]]))[0, 0, 0], 4.0)

    def test_constant_halves(self):
        out = maxpool2(np.full((2, 6, 4), 0.3))
        npt.assert_array_equal(out, np.full((2, 3, 2), 0.3))

    def test_ragged_edge(self):
        x = np.arange(9, dtype=float).reshape(1, 3, 3)
        npt.assert_array_equal(maxpool2(x)[0], [[4.0, 5.0], [7.0, 8.0]])

    def test_ties_route_to_first(self):
        x = np.ones((1, 2, 2))
        _, cache = maxpool2_forward(x)
        dx = maxpool2_backward(np.ones((1, 1, 1)), cache)
        npt.assert_array_equal(dx[0], [[1.0, 0.0], [0.0, 0.0]])

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**32 - 1))
    def test_output_is_max_of_covered_cells(self, height, width, seed):
        x = np.random.default_rng(seed).normal(size=(1, height, width))
        out = maxpool2(x)
        self.assertEqual(out.shape, (1, -(-height // 2), -(-width // 2)))
        for i in range(out.shape[1]):
            for j in range(out.shape[2]):
                self.assertEqual(out[0, i, j], x[0, 2 * i:2 * i + 2, 2 * j:2 * j + 2].max())


class DenseActivationTest(SimpleTestCase):
    def test_dense_examples(self):
        x = np.array([2.0, 3.0])
        npt.assert_array_equal(dense(x, DenseParams(np.eye(2), np.zeros(2))), x)
        npt.assert_array_equal(dense(x, DenseParams(np.zeros((3, 2)), np.array([1.0, 2.0, 3.0]))), [1, 2, 3])
        npt.assert_array_equal(dense(x, DenseParams(np.array([[1.0, 1.0]]), np.zeros(1))), [5.0])

    def test_dense_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            dense(np.ones(3), DenseParams(np.ones((2, 2)), np.zeros(2)))

    def test_activations(self):
        npt.assert_array_equal(activation(np.array([-1.0, 2.0]), 'relu'), [0.0, 2.0])
        self.assertEqual(activation(np.array(0.0), 'tanh'), 0.0)
        self.assertEqual(activation(np.array(0.0), 'sigmoid'), 0.5)

    def test_sigmoid_is_stable(self):
        out = activation(np.array([-800.0, 800.0]), 'sigmoid')
        self.assertTrue(np.all(np.isfinite(out)))
        npt.assert_array_equal(out, [0.0, 1.0])

    def test_unknown_activation(self):
        with self.assertRaises(InvalidParams):
            activation(np.zeros(2), 'softplus')

    def test_upsample_then_crop(self):
        x = np.arange(4, dtype=float).reshape(1, 2, 2)
        up, _ = upsample2_forward(x)
        npt.assert_array_equal(up[0], [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]])
        cropped, _ = crop_forward(up, 3, 3)
        self.assertEqual(cropped.shape, (1, 3, 3))
        with self.assertRaises(ShapeMismatch):
            crop_forward(x, 3, 3)


class GruTest(SimpleTestCase):
    def test_zero_params_keep_zero_state(self):
        params = GruParams.zeros(3, 4)
        npt.assert_array_equal(gru_step(np.ones(3), np.zeros(4), params), np.zeros(4))

    def test_closed_update_gate_remembers(self):
        rng = np.random.default_rng(2)
        params = GruParams.glorot(rng, 3, 4)
        params.bz = np.full(4, -20.0)
        h_prev = rng.normal(size=4)
        npt.assert_allclose(gru_step(rng.normal(size=3), h_prev, params), h_prev, atol=1e-7)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            gru_step(np.ones(2), np.zeros(4), GruParams.zeros(3, 4))

    def test_tensors_round_trip(self):
        params = GruParams.glorot(np.random.default_rng(3), 2, 5)
        again = GruParams.from_tensors(params.tensors('enc_'), 'enc_')
        for name, value in params.tensors().items():
            npt.assert_array_equal(value, again.tensors()[name])


class LossTest(SimpleTestCase):
    def test_bce_examples(self):
        self.assertAlmostEqual(bce_loss(np.ones(4), np.ones(4))[0], 0.0, places=6)
        self.assertAlmostEqual(bce_loss(np.full(6, 0.5), np.array([0, 1, 1, 0, 1, 0]))[0], np.log(2.0))
        self.assertAlmostEqual(bce_loss(np.array([0.9]), np.array([1.0]))[0], 0.1053605, places=6)

    def test_bce_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            bce_loss(np.ones(3), np.ones(4))

    def test_bce_gradient_is_masked_where_clamped(self):
        _, cache = bce_loss(np.array([0.0, 0.5]), np.array([1.0, 1.0]))
        grad = bce_backward(cache)
        self.assertEqual(grad[0], 0.0)
        self.assertAlmostEqual(grad[1], -1.0)

    def test_kl_examples(self):
        self.assertEqual(kl_diag_gaussian(np.zeros(3), np.zeros(3)), 0.0)
        self.assertAlmostEqual(kl_diag_gaussian(np.array([1.0]), np.array([0.0])), 0.5)
        self.assertAlmostEqual(kl_diag_gaussian(np.array([0.0]), np.array([np.log(4.0)])), 0.8068528, places=6)

    def test_kl_batch_is_per_row(self):
        kl = kl_diag_gaussian(np.array([[1.0], [0.0]]), np.zeros((2, 1)))
        npt.assert_allclose(kl, [0.5, 0.0])

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.lists(st.floats(-5, 5), min_size=1, max_size=4))
    def test_losses_are_non_negative(self, mu, logvar):
        size = min(len(mu), len(logvar))
        self.assertGreaterEqual(kl_diag_gaussian(np.array(mu[:size]), np.array(logvar[:size])), -1e-12)
        pred = 1.0 / (1.0 + np.exp(-np.array(mu[:size])))
        self.assertGreaterEqual(bce_loss(pred, (pred > 0.5).astype(float))[0], 0.0)


class AdamTest(SimpleTestCase):
    def setUp(self):
        self.params = {'w': np.array([1.0, -2.0]), 'b': np.array([0.5])}

    def test_zero_gradient_leaves_params(self):
        grads = {name: np.zeros_like(value) for name, value in self.params.items()}
        new_params, state = adam_step(self.params, grads, AdamState.for_params(self.params))
        npt.assert_array_equal(new_params['w'], self.params['w'])
        self.assertEqual(state.step, 1)

    def test_first_step_is_bounded_by_lr(self):
        grads = {'w': np.array([3.0, -0.01]), 'b': np.array([100.0])}
        hyper = AdamHyper()
        new_params, _ = adam_step(self.params, grads, AdamState.for_params(self.params), hyper)
        for name in self.params:
            delta = np.abs(new_params[name] - self.params[name])
            self.assertTrue(np.all(delta <= hyper.lr * (1 + 1e-6)))
        self.assertLess(new_params['w'][0], self.params['w'][0])

    def test_deterministic_and_pure(self):
        grads = {'w': np.array([0.1, 0.2]), 'b': np.array([-0.3])}
        state = AdamState.for_params(self.params)
        first = adam_step(self.params, grads, state)
        second = adam_step(self.params, grads, state)
        npt.assert_array_equal(first[0]['w'], second[0]['w'])
        self.assertEqual(state.step, 0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            adam_step(self.params, {'w': np.zeros(3), 'b': np.zeros(1)}, AdamState())
        with self.assertRaises(ShapeMismatch):
            adam_step(self.params, {'w': np.zeros(2)}, AdamState())

    def test_bad_hyper(self):
        with self.assertRaises(InvalidParams):
            AdamHyper(lr=0.0)


# ====================================
#  GRADIENTS
# ====================================
def projected(out, rng):
    """Scalar loss sum(out * R) for a fixed random R, and its gradient R"""
    weights = rng.normal(size=out.shape)
    return float(np.sum(out * weights)), weights


class GradientCheckTest(SimpleTestCase):
    def assertGradients(self, model_fn, params, tolerance=1e-6, **kwargs):
        report = grad_check(model_fn, params, tolerance=tolerance, **kwargs)
        self.assertTrue(report.passed, str(report))
        return report

    def test_linear_function_is_exact(self):
        coefficients = np.array([[1.5, -2.0], [0.25, 3.0]])

        def model_fn(params, _):
            return float(np.sum(coefficients * params['x'])), {'x': coefficients}

        report = self.assertGradients(model_fn, {'x': np.ones((2, 2))}, tolerance=1e-9)
        self.assertEqual(report.checked, 4)

    def test_wrong_gradient_is_reported(self):
        def model_fn(params, _):
            return float(np.sum(params['x'] ** 2)), {'x': params['x']}

        report = grad_check(model_fn, {'x': np.array([1.0, 2.0])})
        self.assertFalse(report.passed)
        self.assertEqual(report.worst, 'x')

    def test_slightly_wrong_gradient_is_reported(self):
        def model_fn(params, _):
            return float(np.sum(np.sin(params['x']))), {'x': 1.01 * np.cos(params['x'])}

        report = grad_check(model_fn, {'x': np.array([0.3, -1.2, 2.0])}, tolerance=1e-5, atol=1e-3)
        self.assertFalse(report.passed)
        self.assertEqual(report.refined, 0)

    def test_tiny_gradients_under_large_loss(self):
        def model_fn(params, _):
            x = params['x']
            return 50.0 + float(np.sum(1e-7 * x ** 3)), {'x': 3e-7 * x ** 2}

        self.assertGradients(model_fn, {'x': np.array([0.5, -1.5, 2.0])}, tolerance=1e-5, step=1e-4, atol=1e-3)

    def test_relative_error_of_vanishing_gradients(self):
        self.assertEqual(relative_error(np.zeros(3), np.full(3, 1e-12)), 0.0)
        self.assertAlmostEqual(relative_error([1e-7], [1.1e-7], atol=1e-3), 1e-5)
        self.assertAlmostEqual(relative_error([1.0], [1.1], atol=1e-3), 0.1 / 2.1)

    def test_conv(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            params = {'x': rng.normal(size=(2, 2, 5, 4)), 'w': rng.normal(size=(3, 2, 3, 3)), 'b': rng.normal(size=3)}
            upstream = rng.normal(size=(2, 3, 5, 4))

            def model_fn(p, _):
                out, cache = conv2d_forward(p['x'], p['w'], p['b'])
                dx, dw, db = conv2d_backward(upstream, cache)
                return float(np.sum(out * upstream)), {'x': dx, 'w': dw, 'b': db}

            self.assertGradients(model_fn, params)

    def test_pool_upsample_crop(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            upstream = rng.normal(size=(2, 2, 5, 5))

            def model_fn(p, _):
                pooled, pool_cache = maxpool2_forward(p['x'])
                up, up_cache = upsample2_forward(pooled)
                out, crop_cache = crop_forward(up, 5, 5)
                dx = maxpool2_backward(upsample2_backward(crop_backward(upstream, crop_cache), up_cache), pool_cache)
                return float(np.sum(out * upstream)), {'x': dx}

            self.assertGradients(model_fn, {'x': rng.normal(size=(2, 2, 5, 5))})

    def test_dense_and_activations(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            upstream = rng.normal(size=(4, 3))
            for kind in ('relu', 'tanh', 'sigmoid'):
                def model_fn(p, _):
                    pre, dense_cache = dense_forward(p['x'], p['w'], p['b'])
                    out, act_cache = activation_forward(pre, kind)
                    dx, dw, db = dense_backward(activation_backward(upstream, act_cache), dense_cache)
                    return float(np.sum(out * upstream)), {'x': dx, 'w': dw, 'b': db}

                params = {'x': rng.normal(size=(4, 5)), 'w': rng.normal(size=(3, 5)), 'b': rng.normal(size=3)}
                self.assertGradients(model_fn, params)

    def test_conv_pool_dense_stack(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            upstream = rng.normal(size=(2, 4))

            def model_fn(p, _):
                conv, conv_cache = conv2d_forward(p['x'], p['cw'], p['cb'])
                act, act_cache = activation_forward(conv, 'relu')
                pooled, pool_cache = maxpool2_forward(act)
                flat = pooled.reshape(2, -1)
                out, dense_cache = dense_forward(flat, p['dw'], p['db'])
                dflat, ddw, ddb = dense_backward(upstream, dense_cache)
                dact = maxpool2_backward(dflat.reshape(pooled.shape), pool_cache)
                dx, dcw, dcb = conv2d_backward(activation_backward(dact, act_cache), conv_cache)
                return float(np.sum(out * upstream)), {'x': dx, 'cw': dcw, 'cb': dcb, 'dw': ddw, 'db': ddb}

            params = {
                'x': rng.normal(size=(2, 1, 5, 5)),
                'cw': rng.normal(size=(3, 1, 3, 3)), 'cb': rng.normal(size=3),
                'dw': rng.normal(size=(4, 27)), 'db': rng.normal(size=4),
            }
            self.assertGradients(model_fn, params)

    def test_gru_over_five_steps(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            upstream = rng.normal(size=(5, 2, 4))
            def model_fn(p, _):
                gru = GruParams.from_tensors(p)
                hs, caches = gru_sequence_forward(p['xs'], p['h0'], gru)
                dxs, dh0, grads = gru_sequence_backward(upstream, caches)
                return float(np.sum(hs * upstream)), {'xs': dxs, 'h0': dh0, **grads.tensors()}

            params = {name: rng.normal(size=value.shape) for name, value in GruParams.zeros(3, 4).tensors().items()}
            params.update(xs=rng.normal(size=(5, 2, 3)), h0=rng.normal(size=(2, 4)))
            self.assertGradients(model_fn, params)

    def test_losses(self):
        for seed in SEEDS:
            rng = np.random.default_rng(seed)
            target = (rng.random(6) > 0.5).astype(float)

            def model_fn(p, _):
                loss, cache = bce_loss(activation(p['logits'], 'sigmoid'), target)
                pred = activation(p['logits'], 'sigmoid')
                kl = kl_diag_gaussian(p['mu'], p['logvar'])
                dmu, dlogvar = kl_backward(p['mu'], p['logvar'])
                dlogits = bce_backward(cache) * pred * (1.0 - pred)
                return loss + kl, {'logits': dlogits, 'mu': dmu, 'logvar': dlogvar}

            params = {'logits': rng.normal(size=6), 'mu': rng.normal(size=2), 'logvar': rng.normal(size=2)}
            self.assertGradients(model_fn, params)
