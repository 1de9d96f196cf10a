import os
import shutil
import tempfile
from io import BytesIO

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
from PIL import Image

from utils.exceptions import DecodeError, FormatError, InvalidParams, OutOfBounds
from utils.testing import random_grid, toy_floorplan
from .grid import (
    FLOOR, WALL, GridCoord, OccupancyGrid, grid_from_rows, is_floor, load_floorplan, load_grid, load_map,
    render_grid, save_grid,
)


def png_bytes(pixels):
    buffer = BytesIO()
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(buffer, format='PNG')
    return buffer.getvalue()


class FloorplanDecodeTest(SimpleTestCase):
    def test_threshold_and_padding(self):
        grid = load_floorplan(png_bytes([[255, 0, 128], [127, 200, 10]]))
        self.assertEqual((grid.width, grid.height), (5, 4))
        npt.assert_array_equal(grid.cells[1:-1, 1:-1], [[FLOOR, WALL, FLOOR], [WALL, FLOOR, WALL]])
        self.assertTrue(np.all(grid.cells[0] == WALL))
        self.assertTrue(np.all(grid.cells[:, -1] == WALL))

    def test_color_uses_luminance(self):
        pixels = np.array([[[255, 255, 255], [0, 0, 255], [0, 255, 0]]], dtype=np.uint8)
        grid = load_floorplan(png_bytes(pixels))
        npt.assert_array_equal(grid.cells[1, 1:-1], [FLOOR, WALL, FLOOR])

    def test_resize(self):
        grid = load_floorplan(png_bytes(np.full((10, 20), 255)), scale=0.5)
        self.assertEqual((grid.width, grid.height), (12, 7))
        with self.assertRaises(InvalidParams):
            load_floorplan(png_bytes(np.full((10, 20), 255)), scale=0)

    def test_garbage_is_decode_error(self):
        with self.assertRaises(DecodeError):
            load_floorplan(b'not an image at all')

    def test_render_round_trip(self):
        grid = toy_floorplan(40)
        rendered = load_floorplan(render_grid(grid))
        npt.assert_array_equal(rendered.cells[1:-1, 1:-1], grid.cells)


class OccupancyGridTest(SimpleTestCase):
    def test_rows_and_queries(self):
        grid = grid_from_rows(['..#', '...'])
        self.assertEqual(str(grid), 'OccupancyGrid 5x4 (5 floor cells)')
        self.assertTrue(is_floor(grid, (1, 1)))
        self.assertFalse(is_floor(grid, (3, 1)))
        self.assertFalse(is_floor(grid, (0, 0)))
        with self.assertRaises(OutOfBounds):
            is_floor(grid, (5, 0))
        self.assertEqual(grid.floor_cells()[0], GridCoord(1, 1))

    def test_cells_are_read_only(self):
        grid = grid_from_rows(['...'])
        with self.assertRaises(ValueError):
            grid.cells[1, 1] = WALL
        changed = grid.with_cell((1, 1), WALL)
        self.assertNotEqual(changed, grid)
        self.assertEqual(changed.floor_count, grid.floor_count - 1)

    def test_too_small(self):
        with self.assertRaises(InvalidParams):
            OccupancyGrid(np.ones((2, 5)))


class GridFileTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    @hypothesis_settings(max_examples=25, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_save_load_identity(self, width, height, seed):
        grid = random_grid(np.random.default_rng(seed), width, height, wall_fraction=0.3)
        path = os.path.join(self.tmp, 'grid.igrd')
        save_grid(grid, path)
        self.assertEqual(load_grid(path), grid)
        self.assertEqual(load_map(path), grid)

    def test_truncated_file(self):
        path = os.path.join(self.tmp, 'grid.igrd')
        save_grid(toy_floorplan(20), path)
        with open(path, 'rb') as handle:
            data = handle.read()
        with open(path, 'wb') as handle:
            handle.write(data[:-3])
        with self.assertRaises(FormatError):
            load_grid(path)

    def test_load_map_reads_images(self):
        path = os.path.join(self.tmp, 'plan.png')
        with open(path, 'wb') as handle:
            handle.write(png_bytes(np.full((6, 4), 255)))
        self.assertEqual(load_map(path).floor_count, 24)
