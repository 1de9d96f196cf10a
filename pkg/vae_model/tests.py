import os
import tempfile

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase, tag

from neuralnet.gradcheck import grad_check
from pathgen.sampling import sample_random_trajectories
from sequences.dataset import Dataset, dataset_from_sequences
from sequences.extract import IsovistSequence, sequences_for_trajectories
from utils.exceptions import FormatError, HeaderMismatch, InvalidParams, ShapeMismatch
from utils.testing import toy_floorplan
from .checkpoint import load_checkpoint, save_checkpoint
from .network import (
    LatentCode, VaeConfig, VaeModel, decode, elbo_loss, elbo_terms, encode, param_shapes,
    predict_latent, predict_latents, reconstruct, reparameterize,
)
from .training import train


def random_binary_dataset(config, count, seed):
    rng = np.random.default_rng(seed)
    frames = (rng.random((count, config.t, config.window, config.window)) > 0.5).astype(np.uint8)
    records = [IsovistSequence(frames=f, center=(i, 0), spacing=1, heading=0.0) for i, f in enumerate(frames)]
    return dataset_from_sequences(records)


class VaeShapeTest(SimpleTestCase):
    def setUp(self):
        self.config = VaeConfig(t=3, window=9, latent_dim=2, gru_hidden=8)
        self.model = VaeModel.initialize(self.config, seed=1)

    def test_config_validation(self):
        for bad in (dict(t=4, window=9), dict(t=3, window=4), dict(t=3, window=9, latent_dim=0),
                    dict(t=3, window=9, beta=-1.0)):
            with self.assertRaises(InvalidParams):
                VaeConfig(**bad)

    def test_derived_sizes(self):
        config = VaeConfig(t=5, window=33)
        self.assertEqual((config.pooled_once, config.pooled_twice), (17, 9))
        self.assertEqual(config.flat_size, 810)

    def test_encode_contract(self):
        frames = np.random.default_rng(0).random((3, 9, 9)) > 0.5
        code = encode(self.model, frames)
        self.assertEqual(code.mu.shape, (2,))
        self.assertEqual(code.logvar.shape, (2,))
        self.assertTrue(np.all(np.isfinite(code.mu)))
        npt.assert_array_equal(encode(self.model, frames).mu, code.mu)

    def test_encode_rejects_wrong_shape(self):
        with self.assertRaises(ShapeMismatch):
            encode(self.model, np.zeros((5, 9, 9)))

    def test_decode_contract(self):
        probs = decode(self.model, np.array([0.3, -1.2]))
        self.assertEqual(probs.shape, (3, 1, 9, 9))
        self.assertTrue(np.all((probs > 0) & (probs < 1)))
        npt.assert_array_equal(probs, decode(self.model, np.array([0.3, -1.2])))
        self.assertEqual(decode(self.model, np.zeros((4, 2))).shape, (4, 3, 1, 9, 9))

    def test_decode_rejects_wrong_dim(self):
        with self.assertRaises(ShapeMismatch):
            decode(self.model, np.zeros(3))

    def test_zero_and_one_inputs_encode_differently(self):
        config = VaeConfig(t=3, window=9, gru_hidden=8)
        differing = 0
        for seed in range(10):
            model = VaeModel.initialize(config, seed)
            zeros = predict_latent(model, np.zeros((3, 9, 9)))
            ones = predict_latent(model, np.ones((3, 9, 9)))
            differing += int(not np.array_equal(zeros, ones))
        self.assertGreaterEqual(differing, 9)

    def test_predict_latents_matches_single(self):
        rng = np.random.default_rng(4)
        batch = (rng.random((5, 3, 9, 9)) > 0.5).astype(float)
        latents = predict_latents(self.model, list(batch), batch_size=2)
        self.assertEqual(latents.shape, (5, 2))
        npt.assert_allclose(latents[3], predict_latent(self.model, batch[3]))

    def test_reconstruct_shape(self):
        out = reconstruct(self.model, np.zeros((3, 9, 9)))
        self.assertEqual(out.shape, (3, 9, 9))


class ReparameterizeTest(SimpleTestCase):
    def test_inference_returns_mu(self):
        code = LatentCode(np.array([0.7]), np.array([2.0]))
        npt.assert_array_equal(reparameterize(code, np.array([5.0]), train_mode=False), [0.7])

    def test_vanishing_variance(self):
        code = LatentCode(np.array([0.7]), np.array([-40.0]))
        npt.assert_allclose(reparameterize(code, np.array([3.0]), train_mode=True), [0.7], atol=1e-8)

    def test_unit_gaussian_sample(self):
        code = LatentCode(np.array([0.0]), np.array([0.0]))
        npt.assert_array_equal(reparameterize(code, np.array([1.5]), train_mode=True), [1.5])


class ElboTest(SimpleTestCase):
    def test_constant_half_decoder_gives_ln2(self):
        config = VaeConfig(t=3, window=9, gru_hidden=6, beta=0.0)
        model = VaeModel.initialize(config, seed=3)
        model.params['dec_out_w'][...] = 0.0
        model.params['dec_out_b'][...] = 0.0
        batch = (np.random.default_rng(0).random((2, 3, 9, 9)) > 0.5).astype(float)
        terms, _ = elbo_loss(model, batch, noise=np.ones((2, 1)))
        self.assertAlmostEqual(terms.loss, np.log(2.0), places=12)

    def test_loss_is_non_negative(self):
        config = VaeConfig(t=3, window=9, gru_hidden=6)
        for seed in range(5):
            model = VaeModel.initialize(config, seed)
            rng = np.random.default_rng(seed)
            batch = (rng.random((3, 3, 9, 9)) > 0.5).astype(float)
            terms, grads = elbo_loss(model, batch, noise=rng.standard_normal((3, 1)))
            self.assertGreaterEqual(terms.loss, 0.0)
            self.assertEqual(set(grads), set(param_shapes(config)))

    def test_full_model_gradient(self):
        config = VaeConfig(t=3, window=9, latent_dim=1, gru_hidden=6)
        for seed in range(10):
            rng = np.random.default_rng(seed)
            params = {name: 0.3 * rng.standard_normal(shape) for name, shape in param_shapes(config).items()}
            batch = rng.random((2, 3, 9, 9))
            noise = rng.standard_normal((2, 1))

            def model_fn(p, _):
                terms, grads = elbo_terms(p, config, batch, noise)
                return terms.loss, grads

            # GRU gate gradients can be far below 1e-3; those tensors are judged by absolute error
            report = grad_check(model_fn, params, tolerance=1e-5, step=1e-4, max_checks=4, seed=seed, atol=1e-3)
            self.assertTrue(report.passed, str(report))


class CheckpointTest(SimpleTestCase):
    def test_round_trip_is_bit_exact(self):
        config = VaeConfig(t=3, window=9, latent_dim=2, gru_hidden=5, beta=0.5)
        model = VaeModel.initialize(config, seed=11)
        frames = (np.random.default_rng(1).random((3, 9, 9)) > 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.ivae')
            save_checkpoint(model, path)
            loaded = load_checkpoint(path)
        self.assertEqual(loaded.config, config)
        npt.assert_array_equal(predict_latent(loaded, frames), predict_latent(model, frames))

    def test_truncated_checkpoint(self):
        model = VaeModel.initialize(VaeConfig(t=1, window=5, gru_hidden=2), seed=0)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.ivae')
            save_checkpoint(model, path)
            with open(path, 'r+b') as handle:
                handle.truncate(os.path.getsize(path) - 3)
            with self.assertRaises(FormatError):
                load_checkpoint(path)


class TrainingTest(SimpleTestCase):
    def setUp(self):
        self.config = VaeConfig(t=3, window=9, gru_hidden=4)
        self.dataset = random_binary_dataset(self.config, 12, seed=5)

    def test_same_seed_same_trace(self):
        first = train(VaeModel.initialize(self.config, 0), self.dataset, epochs=2, batch_size=5, seed=9)
        second = train(VaeModel.initialize(self.config, 0), self.dataset, epochs=2, batch_size=5, seed=9)
        self.assertEqual(first.to_text(), second.to_text())
        self.assertEqual(len(first), 2)
        self.assertTrue(all(np.isfinite(first.losses)))

    def test_zero_epochs_changes_nothing(self):
        model = VaeModel.initialize(self.config, 0)
        before = model.copy()
        trace = train(model, self.dataset, epochs=0, batch_size=4, seed=1)
        self.assertEqual(len(trace), 0)
        for name, value in before.params.items():
            npt.assert_array_equal(model.params[name], value)

    def test_header_mismatch(self):
        other = VaeConfig(t=5, window=9, gru_hidden=4)
        with self.assertRaises(HeaderMismatch):
            train(VaeModel.initialize(other, 0), self.dataset, epochs=1, batch_size=4, seed=1)

    def test_checkpoint_written_every_epoch(self):
        seen = []
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'model.ivae')
            model = VaeModel.initialize(self.config, 0)
            train(model, self.dataset, epochs=2, batch_size=6, seed=3, checkpoint_path=path,
                  on_epoch=lambda stats: seen.append((stats.epoch, os.path.exists(path))))
            restored = load_checkpoint(path)
        self.assertEqual(seen, [(1, True), (2, True)])
        npt.assert_array_equal(restored.params['dec_out_w'], model.params['dec_out_w'])


@tag('slow')
class ToyCorpusTest(SimpleTestCase):
    """Desk-scale learning check on one 64x64 plan (t=5, s=2, W=17, d=1)"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        grid = toy_floorplan()
        trajectories = sample_random_trajectories(grid, count=160, seed=7)
        sequences = sequences_for_trajectories(trajectories, grid, t=5, s=2, radius=8)
        cls.train_set = Dataset(5, 2, 17, sequences[:-200])
        cls.held_out = sequences[-200:]
        config = VaeConfig(t=5, window=17, latent_dim=1, gru_hidden=32)
        cls.model = VaeModel.initialize(config, seed=7)
        cls.trace = train(cls.model, cls.train_set, epochs=30, batch_size=64, seed=7)

    def test_corpus_is_large_enough(self):
        self.assertGreaterEqual(self.train_set.count, 2000)

    def test_loss_falls(self):
        self.assertLess(self.trace.epochs[-1].loss, self.trace.epochs[0].loss)

    def test_beats_total_uncertainty(self):
        self.assertLess(self.trace.epochs[-1].bce, np.log(2.0) - 0.05)

    def test_latent_range_endpoints_decode_differently(self):
        low, high = decode(self.model, np.array([-3.0])), decode(self.model, np.array([3.0]))
        self.assertGreater(np.mean(np.abs(low - high)), 0.0)

    def test_reconstructions_follow_motion(self):
        inputs = np.stack([seq.frames for seq in self.held_out]).astype(float)
        outputs = reconstruct(self.model, inputs)
        input_motion = np.abs(np.diff(inputs, axis=1)).mean(axis=(1, 2, 3))
        output_motion = np.abs(np.diff(outputs, axis=1)).mean(axis=(1, 2, 3))
        self.assertGreater(np.corrcoef(input_motion, output_motion)[0, 1], 0.0)
