import math

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase, tag
from hypothesis import given, settings as hypothesis_settings, strategies as st

from gridworld.grid import WALL, GridCoord, OccupancyGrid, grid_from_rows
from utils.exceptions import InvalidParams, OriginNotFloor, OutOfBounds
from utils.testing import random_grid
from .isovist import (
    Isovist, agreement, compute_isovist, line_of_sight, oracle_isovist, rotate_isovist, supercover_line,
    within_range,
)


def random_floor_cell(rng, grid):
    cells = grid.floor_cells()
    return cells[rng.integers(len(cells))]


class SupercoverTest(SimpleTestCase):
    def test_straight_and_diagonal(self):
        self.assertEqual(supercover_line((0, 0), (3, 0)), [(0, 0), (1, 0), (2, 0), (3, 0)])
        self.assertEqual(supercover_line((0, 0), (1, 1)), [(0, 0), (1, 0), (0, 1), (1, 1)])

    def test_endpoints_and_adjacency(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = tuple(rng.integers(-10, 10, 2)), tuple(rng.integers(-10, 10, 2))
            cells = supercover_line(a, b)
            self.assertEqual(cells[0], a)
            self.assertEqual(cells[-1], b)

    def test_without_corners_steps_diagonally(self):
        self.assertEqual(supercover_line((0, 0), (1, 1), corners=False), [(0, 0), (1, 1)])
        self.assertEqual(supercover_line((0, 0), (3, -3), corners=False), [(0, 0), (1, -1), (2, -2), (3, -3)])
        rng = np.random.default_rng(5)
        for _ in range(50):
            a, b = tuple(rng.integers(-10, 10, 2)), tuple(rng.integers(-10, 10, 2))
            cells = supercover_line(a, b, corners=False)
            self.assertEqual((cells[0], cells[-1]), (a, b))
            for p, q in zip(cells, cells[1:]):
                self.assertEqual(max(abs(p[0] - q[0]), abs(p[1] - q[1])), 1)

    def test_wall_blocks_sight(self):
        grid = grid_from_rows(['.....', '..#..', '.....'])
        self.assertFalse(line_of_sight(grid, (1, 2), (5, 2)))
        self.assertTrue(line_of_sight(grid, (1, 1), (5, 1)))
        self.assertFalse(line_of_sight(grid, (1, 1), (3, 2)))


class ShadowCastingTest(SimpleTestCase):
    def test_empty_room_matches_oracle(self):
        for width, height, radius in ((5, 5, 6), (15, 11, 3), (21, 21, 6)):
            grid = grid_from_rows(['.' * width] * height)
            for origin in grid.floor_cells():
                with self.subTest(room=(width, height), origin=origin):
                    npt.assert_array_equal(
                        compute_isovist(grid, origin, radius).window, oracle_isovist(grid, origin, radius).window
                    )

    def test_range_disc(self):
        grid = grid_from_rows(['.' * 41] * 41)
        iso = compute_isovist(grid, (21, 21), 8)
        for v in range(iso.size):
            for u in range(iso.size):
                self.assertEqual(bool(iso.window[v, u]), within_range(u - 8, v - 8, 8))

    def test_center_visible_and_walls_dark(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            grid = random_grid(rng, 24, 24, wall_fraction=0.25)
            origin = random_floor_cell(rng, grid)
            iso = compute_isovist(grid, origin, 6)
            self.assertEqual(iso.window[6, 6], 1)
            for cell in iso.world_cells():
                self.assertEqual(grid.cells[cell.y, cell.x], 1)

    def test_wall_casts_shadow(self):
        grid = grid_from_rows(['.......', '...#...', '.......'])
        iso = compute_isovist(grid, (4, 3), 3)
        self.assertEqual(iso.window[3 - 2, 3], 0)
        self.assertEqual(iso.window[3 - 1, 3], 0)

    def test_wall_corner_blocks_ray(self):
        grid = grid_from_rows(['....', '.#..', '....', '....'])
        iso = compute_isovist(grid, (1, 1), 3)
        # (1,1) -> (3,2) grazes the corner of the wall at (2,2)
        self.assertEqual(iso.window[3 + 1, 3 + 2], 0)
        self.assertEqual(iso.window[3, 3 + 2], 1)
        npt.assert_array_equal(iso.window, oracle_isovist(grid, (1, 1), 3).window)

    def test_random_grids_match_oracle_exactly(self):
        rng = np.random.default_rng(17)
        for case in range(30):
            grid = random_grid(rng, 24, 24, wall_fraction=rng.choice([0.1, 0.2, 0.35]))
            for _ in range(4):
                origin = random_floor_cell(rng, grid)
                with self.subTest(case=case, origin=origin):
                    npt.assert_array_equal(
                        compute_isovist(grid, origin, 7).window, oracle_isovist(grid, origin, 7).window
                    )

    def test_empty_room_has_dihedral_symmetry(self):
        grid = grid_from_rows(['.' * 25] * 25)
        window = compute_isovist(grid, (13, 13), 9).window
        for turned in (window.T, np.fliplr(window), np.flipud(window), np.rot90(window), np.rot90(window, 2)):
            npt.assert_array_equal(turned, window)

    def test_mirrored_grid_gives_mirrored_isovist(self):
        rng = np.random.default_rng(23)
        for _ in range(15):
            grid = random_grid(rng, 20, 20, wall_fraction=0.25)
            origin = random_floor_cell(rng, grid)
            window = compute_isovist(grid, origin, 6).window
            transposed = OccupancyGrid(grid.cells.T.copy())
            npt.assert_array_equal(compute_isovist(transposed, (origin.y, origin.x), 6).window, window.T)
            flipped = OccupancyGrid(np.fliplr(grid.cells).copy())
            npt.assert_array_equal(
                compute_isovist(flipped, (grid.width - 1 - origin.x, origin.y), 6).window, np.fliplr(window)
            )

    def test_bad_origins(self):
        grid = grid_from_rows(['...', '.#.', '...'])
        with self.assertRaises(OriginNotFloor):
            compute_isovist(grid, (2, 2), 3)
        with self.assertRaises(OutOfBounds):
            compute_isovist(grid, (9, 1), 3)
        with self.assertRaises(InvalidParams):
            compute_isovist(grid, (1, 1), 0)

    @hypothesis_settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_extra_wall_never_reveals(self, seed):
        rng = np.random.default_rng(seed)
        grid = random_grid(rng, 20, 20, wall_fraction=0.2)
        origin = random_floor_cell(rng, grid)
        blocked = random_floor_cell(rng, grid)
        if blocked == origin:
            return
        before = compute_isovist(grid, origin, 8).window
        after = compute_isovist(grid.with_cell(blocked, WALL), origin, 8).window
        self.assertTrue(np.all(after <= before))

    @tag('slow')
    def test_random_grids_agree_with_oracle(self):
        rng = np.random.default_rng(2024)
        scores = []
        for _ in range(200):
            grid = random_grid(rng, 64, 64, wall_fraction=0.2)
            for _ in range(20):
                origin = random_floor_cell(rng, grid)
                scores.append(agreement(compute_isovist(grid, origin, 8), oracle_isovist(grid, origin, 8)))
        self.assertGreaterEqual(float(np.mean(scores)), 0.98)


class RotationTest(SimpleTestCase):
    def setUp(self):
        window = np.zeros((5, 5), dtype=np.uint8)
        window[2, 2] = 1
        window[3, 2] = 1
        self.iso = Isovist(window, 2, GridCoord(0, 0))

    def test_heading_along_x_is_identity(self):
        npt.assert_array_equal(rotate_isovist(self.iso, 0.0).window, self.iso.window)

    def test_walking_down_points_right(self):
        rotated = rotate_isovist(self.iso, math.pi / 2).window
        self.assertEqual(rotated[2, 3], 1)
        self.assertEqual(int(rotated.sum()), 2)

    def test_four_quarter_turns(self):
        rng = np.random.default_rng(1)
        iso = Isovist((rng.random((9, 9)) > 0.5).astype(np.uint8), 4)
        turned = iso
        for _ in range(4):
            turned = rotate_isovist(turned, math.pi / 2)
        npt.assert_array_equal(turned.window, iso.window)

    def test_full_turn_and_inverse_quarter_turns(self):
        rng = np.random.default_rng(2)
        iso = Isovist((rng.random((11, 11)) > 0.5).astype(np.uint8), 5)
        npt.assert_array_equal(rotate_isovist(iso, 2 * math.pi).window, iso.window)
        for k in range(-4, 5):
            theta = k * math.pi / 2
            with self.subTest(k=k):
                npt.assert_array_equal(rotate_isovist(rotate_isovist(iso, theta), -theta).window, iso.window)

    def test_bad_heading(self):
        with self.assertRaises(InvalidParams):
            rotate_isovist(self.iso, float('nan'))
