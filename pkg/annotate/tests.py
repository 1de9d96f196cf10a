import os
import tempfile
from io import BytesIO

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase
from PIL import Image

from gridworld.grid import GridCoord, grid_from_rows
from pathgen.trajectory import Trajectory
from utils.exceptions import (
    EmptyInput, FormatError, InvalidParams, OutOfBounds, TrajectoryTooShort, UnsupportedLatentDim,
)
from utils.testing import toy_floorplan
from vae_model.network import VaeConfig, VaeModel
from .colors import certainty_color, certainty_image, hue_color, latent_colors, normalize_latents, rgba_hex
from .overlay import (
    AnnotatedPoint, annotate_trajectories, format_sidecar, read_sidecar, render_overlay, write_sidecar,
)
from .strips import (
    latent_range_from_points, render_comparison, render_strip, sample_latent_grid, sample_latent_random,
)


def decode_png(data):
    return np.asarray(Image.open(BytesIO(data)).convert('RGB'))


def straight_walk(y, x_from, x_to):
    return Trajectory(tuple(GridCoord(x, y) for x in range(x_from, x_to)))


class ColorTest(SimpleTestCase):
    def test_certainty_endpoints(self):
        self.assertEqual(certainty_color(0.0), (0, 0, 0))
        self.assertEqual(certainty_color(0.5), (0, 255, 0))
        self.assertEqual(certainty_color(1.0), (255, 255, 255))
        self.assertEqual(certainty_color(0.25), (0, 128, 0))

    def test_certainty_is_monotone_per_channel(self):
        values = np.linspace(0.0, 1.0, 201)
        rgb = certainty_image(values).astype(int)
        lower, upper = rgb[values <= 0.5], rgb[values >= 0.5]
        self.assertTrue(np.all(np.diff(lower, axis=0) >= 0))
        self.assertTrue(np.all(np.diff(upper, axis=0) >= 0))

    def test_hue_endpoints(self):
        self.assertEqual(hue_color(0.0), (255, 0, 0, 255))
        self.assertEqual(hue_color(1.0), (255, 0, 128, 255))

    def test_degenerate_latents_get_midpoint(self):
        colors = latent_colors(np.full((4, 1), 0.42))
        self.assertEqual(set(colors), {hue_color(0.5)})

    def test_normalization_range(self):
        normalized = normalize_latents(np.array([[2.0], [4.0], [3.0]]))
        npt.assert_array_equal(normalized[:, 0], [0.0, 1.0, 0.5])

    def test_affine_rescaling_keeps_colors(self):
        for seed in range(20):
            latents = np.random.default_rng(seed).normal(size=(30, 1))
            self.assertEqual(latent_colors(latents), latent_colors(3.0 * latents + 7.0))

    def test_multi_dimensional_colors(self):
        colors = latent_colors(np.array([[0.0, 10.0], [1.0, 20.0]]))
        self.assertEqual(colors, [(0, 0, 128, 255), (255, 255, 128, 255)])
        colors = latent_colors(np.array([[0.0, 1.0, 0.0, 5.0], [1.0, 0.0, 1.0, 6.0]]))
        self.assertEqual(colors[0], (0, 255, 0, 255))

    def test_rgba_hex(self):
        self.assertEqual(rgba_hex((255, 0, 128, 255)), '#FF0080FF')


class OverlayTest(SimpleTestCase):
    def setUp(self):
        self.grid = grid_from_rows(['....', '.##.', '....'])

    def test_empty_overlay_is_floor_plan(self):
        pixels = decode_png(render_overlay(self.grid, [], scale=1))
        npt.assert_array_equal(pixels[..., 0], self.grid.cells * 255)

    def test_single_point_single_pixel(self):
        point = AnnotatedPoint(GridCoord(1, 1), np.array([0.0]), (10, 20, 30, 255))
        pixels = decode_png(render_overlay(self.grid, [point], scale=1))
        self.assertEqual(tuple(pixels[1, 1]), (10, 20, 30))
        plain = np.stack([self.grid.cells * 255] * 3, axis=-1)
        self.assertEqual(int(np.sum(np.any(pixels != plain, axis=-1))), 1)

    def test_scaled_squares_and_determinism(self):
        point = AnnotatedPoint(GridCoord(4, 3), np.array([0.0]), (1, 2, 3, 255))
        data = render_overlay(self.grid, [point], scale=3)
        self.assertEqual(data, render_overlay(self.grid, [point], scale=3))
        pixels = decode_png(data)
        self.assertEqual(pixels.shape, (15, 18, 3))
        self.assertTrue(np.all(pixels[9:12, 12:15] == (1, 2, 3)))

    def test_point_outside_grid(self):
        point = AnnotatedPoint(GridCoord(40, 1), np.array([0.0]), (0, 0, 0, 255))
        with self.assertRaises(OutOfBounds):
            render_overlay(self.grid, [point])

    def test_sidecar_lines(self):
        points = [AnnotatedPoint(GridCoord(3, 4), np.array([0.5, -1.0]), (255, 0, 128, 255))]
        self.assertEqual(format_sidecar(points), '3,4,0.5,-1.0,#FF0080FF\n')
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'overlay.txt')
            write_sidecar(points, path)
            with open(path) as handle:
                self.assertEqual(handle.read(), '3,4,0.5,-1.0,#FF0080FF\n')
            loaded = read_sidecar(path)
            self.assertEqual(loaded[0].position, GridCoord(3, 4))
            npt.assert_array_equal(loaded[0].latent, [0.5, -1.0])
            self.assertEqual(loaded[0].color, (255, 0, 128, 255))
            with open(path, 'w') as handle:
                handle.write('3,4,#FF0080FF\n')
            with self.assertRaises(FormatError):
                read_sidecar(path)


class AnnotateTrajectoriesTest(SimpleTestCase):
    def setUp(self):
        self.grid = toy_floorplan()
        self.model = VaeModel.initialize(VaeConfig(t=3, window=9, gru_hidden=4), seed=2)
        self.walk = straight_walk(10, 2, 20)

    def test_points_and_determinism(self):
        first = annotate_trajectories(self.model, self.grid, [self.walk], t=3, s=2, radius=4)
        second = annotate_trajectories(self.model, self.grid, [self.walk], t=3, s=2, radius=4)
        self.assertEqual(len(first), len(self.walk) - 4)
        self.assertEqual([p.color for p in first], [p.color for p in second])
        self.assertEqual(first[0].position, GridCoord(4, 10))

    def test_too_short_names_source(self):
        with self.assertRaisesRegex(TrajectoryTooShort, 'short.txt'):
            annotate_trajectories(self.model, self.grid, [straight_walk(10, 2, 5)], t=3, s=2, radius=4,
                                  sources=['short.txt'])

    def test_nothing_to_annotate(self):
        with self.assertRaises(EmptyInput):
            annotate_trajectories(self.model, self.grid, [], t=3, s=2, radius=4)


class LatentStripTest(SimpleTestCase):
    def setUp(self):
        self.model = VaeModel.initialize(VaeConfig(t=3, window=9, gru_hidden=4), seed=5)

    def test_grid_endpoints_and_spacing(self):
        samples = sample_latent_grid(self.model, 2, -1.5, 2.0)
        self.assertEqual([float(s.z[0]) for s in samples], [-1.5, 2.0])
        samples = sample_latent_grid(self.model, 25, -3.0, 3.0)
        npt.assert_allclose(np.diff([s.z[0] for s in samples]), 0.25)
        self.assertEqual(samples[0].frames.shape, (3, 9, 9))

    def test_grid_rejects_bad_requests(self):
        with self.assertRaises(InvalidParams):
            sample_latent_grid(self.model, 1, -3.0, 3.0)
        with self.assertRaises(InvalidParams):
            sample_latent_grid(self.model, 5, 1.0, 1.0)
        model_2d = VaeModel.initialize(VaeConfig(t=3, window=9, latent_dim=2, gru_hidden=4), seed=5)
        with self.assertRaises(UnsupportedLatentDim):
            sample_latent_grid(model_2d, 5, -3.0, 3.0)

    def test_random_samples_are_sorted(self):
        model_2d = VaeModel.initialize(VaeConfig(t=3, window=9, latent_dim=2, gru_hidden=4), seed=5)
        samples = sample_latent_random(model_2d, 6, seed=1)
        firsts = [s.z[0] for s in samples]
        self.assertEqual(firsts, sorted(firsts))

    def test_latent_range_from_points(self):
        points = [AnnotatedPoint(GridCoord(0, 0), np.array([v]), (0, 0, 0, 255)) for v in (0.3, -0.2, 0.9)]
        self.assertEqual(latent_range_from_points(points), (-0.2, 0.9))
        with self.assertRaises(EmptyInput):
            latent_range_from_points([])

    def test_strip_layout(self):
        frames = np.stack([np.zeros((9, 9)), np.full((9, 9), 0.5), np.ones((9, 9))])
        pixels = decode_png(render_strip([frames]))
        self.assertEqual(pixels.shape, (27 + 4, 9, 3))
        self.assertEqual(tuple(pixels[0, 0]), (255, 255, 255))
        self.assertEqual(tuple(pixels[13, 4]), (0, 255, 0))
        self.assertEqual(tuple(pixels[26, 8]), (0, 0, 0))
        self.assertEqual(tuple(pixels[28, 0]), hue_color(0.5)[:3])

    def test_strip_of_latent_grid_has_one_column_per_sample(self):
        samples = sample_latent_grid(self.model, 25, -3.0, 3.0)
        pixels = decode_png(render_strip(samples))
        self.assertEqual(pixels.shape[1], 25 * 9)
        self.assertEqual(tuple(pixels[-1, 0]), hue_color(0.0)[:3])
        self.assertEqual(tuple(pixels[-1, -1]), hue_color(1.0)[:3])

    def test_empty_strip(self):
        with self.assertRaises(EmptyInput):
            render_strip([])

    def test_comparison_layout(self):
        source = (np.random.default_rng(0).random((3, 9, 9)) > 0.5).astype(float)
        pixels = decode_png(render_comparison([source], [np.full((3, 9, 9), 0.5)], scale=2))
        self.assertEqual(pixels.shape, (54, 36, 3))
        self.assertEqual(tuple(pixels[0, 20]), (0, 255, 0))
