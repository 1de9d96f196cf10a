import math
import os
import shutil
import tempfile

import networkx as nx
import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from hypothesis import given, settings as hypothesis_settings, strategies as st

from gridworld.grid import FLOOR, WALL, GridCoord, OccupancyGrid, grid_from_rows
from utils.exceptions import ExhaustedRetries, FormatError, InvalidParams, NoFloor, OutOfBounds, Unreachable
from utils.testing import random_grid, toy_floorplan
from .graph import build_route_graph, dijkstra_shortest_path
from .sampling import sample_random_trajectories
from .trajectory import (
    SQRT2, Trajectory, heading_at, load_trajectory, parse_trajectory, save_trajectory, step_weight,
)


def assert_walkable(test, grid, traj):
    for a, b in zip(traj.points, traj.points[1:]):
        test.assertEqual(grid.cells[b.y, b.x], FLOOR)
        if a.x != b.x and a.y != b.y:
            test.assertEqual(grid.cells[a.y, b.x], FLOOR)
            test.assertEqual(grid.cells[b.y, a.x], FLOOR)


def without_floor_blocks(grid):
    """Wall off one cell of every 2x2 floor block, leaving no diagonal moves"""
    cells = grid.cells.copy()
    for y in range(cells.shape[0] - 1):
        for x in range(cells.shape[1] - 1):
            if cells[y:y + 2, x:x + 2].all():
                cells[y + 1, x + 1] = WALL
    return OccupancyGrid(cells)


class RouteGraphTest(SimpleTestCase):
    def test_no_corner_cutting(self):
        grid = grid_from_rows(['.#', '..'])
        graph = build_route_graph(grid)
        self.assertNotIn(GridCoord(2, 1), graph)
        self.assertFalse(graph.graph.has_edge(GridCoord(1, 1), GridCoord(2, 2)))
        self.assertEqual(graph.graph[GridCoord(1, 2)][GridCoord(2, 2)]['weight'], 1.0)

    def test_diagonal_weight(self):
        graph = build_route_graph(grid_from_rows(['..', '..']))
        self.assertEqual(graph.graph[GridCoord(1, 1)][GridCoord(2, 2)]['weight'], SQRT2)
        self.assertEqual(graph.graph.number_of_edges(), 6)

    def test_components_and_no_floor(self):
        graph = build_route_graph(grid_from_rows(['..#.']))
        self.assertEqual([len(c) for c in graph.components()], [2, 1])
        with self.assertRaises(NoFloor):
            build_route_graph(grid_from_rows(['##']))


class ShortestPathTest(SimpleTestCase):
    def test_matches_floyd_warshall(self):
        rng = np.random.default_rng(31)
        for case in range(25):
            grid = random_grid(rng, 12, 10, wall_fraction=0.25)
            graph = build_route_graph(grid)
            distances = nx.floyd_warshall(graph.graph)
            cells = grid.floor_cells()
            for _ in range(8):
                start, goal = (cells[i] for i in rng.choice(len(cells), 2, replace=False))
                expected = distances[start][goal]
                with self.subTest(case=case, start=start, goal=goal):
                    if math.isinf(expected):
                        with self.assertRaises(Unreachable):
                            dijkstra_shortest_path(graph, start, goal)
                        continue
                    path = dijkstra_shortest_path(graph, start, goal)
                    self.assertEqual((path[0], path[-1]), (start, goal))
                    self.assertAlmostEqual(path.weight, expected, places=9)
                    assert_walkable(self, grid, path)

    @tag('slow')
    def test_all_pairs_match_floyd_warshall(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            grid = random_grid(rng, 8, 8, wall_fraction=0.2)
            graph = build_route_graph(grid)
            distances = nx.floyd_warshall(graph.graph)
            cells = grid.floor_cells()
            for start in cells:
                for goal in cells:
                    if math.isinf(distances[start][goal]):
                        continue
                    self.assertAlmostEqual(dijkstra_shortest_path(graph, start, goal).weight,
                                           distances[start][goal], places=9)

    def test_reversed_route_costs_the_same(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            grid = random_grid(rng, 14, 14, wall_fraction=0.2)
            graph = build_route_graph(grid)
            component = sorted(graph.components()[0])
            start, goal = component[0], component[-1]
            forward = dijkstra_shortest_path(graph, start, goal)
            backward = dijkstra_shortest_path(graph, goal, start)
            self.assertAlmostEqual(forward.weight, backward.weight, places=9)

    def test_matches_breadth_first_search_without_diagonals(self):
        rng = np.random.default_rng(19)
        for case in range(10):
            grid = without_floor_blocks(random_grid(rng, 12, 12, wall_fraction=0.15))
            graph = build_route_graph(grid)
            self.assertTrue(all(w == 1.0 for _, _, w in graph.graph.edges(data='weight')))
            component = sorted(graph.components()[0])
            for start, goal in zip(component[::3], component[::-4]):
                with self.subTest(case=case, start=start, goal=goal):
                    self.assertEqual(dijkstra_shortest_path(graph, start, goal).weight,
                                     nx.shortest_path_length(graph.graph, start, goal))

    def test_tie_breaking_is_repeatable(self):
        graph = build_route_graph(grid_from_rows(['.' * 8] * 8))
        first = dijkstra_shortest_path(graph, (1, 1), (8, 5))
        self.assertEqual(first, dijkstra_shortest_path(graph, (1, 1), (8, 5)))

    def test_same_cell_and_bad_nodes(self):
        graph = build_route_graph(grid_from_rows(['...', '.#.']))
        self.assertEqual(len(dijkstra_shortest_path(graph, (1, 1), (1, 1))), 1)
        with self.assertRaises(InvalidParams):
            dijkstra_shortest_path(graph, (2, 2), (1, 1))

    def test_wall_splits_rooms(self):
        graph = build_route_graph(grid_from_rows(['..#..', '..#..']))
        with self.assertRaises(Unreachable):
            dijkstra_shortest_path(graph, (1, 1), (5, 2))


class SamplingTest(SimpleTestCase):
    def test_deterministic(self):
        grid = toy_floorplan(30)
        first = sample_random_trajectories(grid, 10, seed=4)
        self.assertEqual(first, sample_random_trajectories(grid, 10, seed=4))
        self.assertNotEqual(first, sample_random_trajectories(grid, 10, seed=5))
        self.assertEqual(len(first), 10)
        for traj in first:
            self.assertGreaterEqual(len(traj), 2)
            assert_walkable(self, grid, traj)

    def test_prefix_stable(self):
        grid = toy_floorplan(30)
        self.assertEqual(sample_random_trajectories(grid, 3, seed=9),
                         sample_random_trajectories(grid, 6, seed=9)[:3])

    def test_bad_requests(self):
        with self.assertRaises(InvalidParams):
            sample_random_trajectories(toy_floorplan(20), 0, seed=1)
        with self.assertRaises(InvalidParams):
            sample_random_trajectories(grid_from_rows(['.#']), 1, seed=1)

    def test_disconnected_rooms(self):
        grid = grid_from_rows(['....#.....'] * 5)
        trajectories = sample_random_trajectories(grid, 20, seed=3)
        self.assertEqual(len(trajectories), 20)
        for traj in trajectories:
            sides = {p.x < 5 for p in traj.points}
            self.assertEqual(len(sides), 1)
            assert_walkable(self, grid, traj)

    @override_settings(MAX_PATH_RETRIES=5)
    def test_exhausted_retries(self):
        with self.assertRaises(ExhaustedRetries):
            sample_random_trajectories(grid_from_rows(['.#.#.#.']), 1, seed=1)


class TrajectoryTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_points_must_touch(self):
        with self.assertRaises(InvalidParams):
            Trajectory(((0, 0), (2, 0)))
        with self.assertRaises(InvalidParams):
            Trajectory(())

    def test_weight_and_headings(self):
        traj = Trajectory(((0, 0), (1, 0), (2, 1), (2, 2)))
        self.assertAlmostEqual(traj.weight, 2.0 + SQRT2)
        self.assertEqual(step_weight((0, 0), (1, 1)), SQRT2)
        self.assertEqual(heading_at(traj, 0), 0.0)
        self.assertAlmostEqual(heading_at(traj, 3), math.pi / 2)
        self.assertAlmostEqual(heading_at(traj, 1), math.atan2(1, 2))
        with self.assertRaises(InvalidParams):
            heading_at(Trajectory(((0, 0),)), 0)

    def test_parse_interpolates_and_skips_comments(self):
        traj = parse_trajectory("# walk\n1,1\n4,1  # corridor\n\n4,1\n4,3\n")
        self.assertEqual(traj.points, ((1, 1), (2, 1), (3, 1), (4, 1), (4, 2), (4, 3)))

    def test_heading_bisects_corner(self):
        traj = Trajectory(((3, 3), (4, 3), (4, 4)))
        self.assertAlmostEqual(heading_at(traj, 1), math.pi / 4)

    def test_parse_diagonal_anchors(self):
        self.assertEqual(parse_trajectory("0,0\n1,1\n").points, ((0, 0), (1, 1)))
        self.assertEqual(parse_trajectory("0,0\n3,3\n").points, ((0, 0), (1, 1), (2, 2), (3, 3)))
        self.assertEqual(parse_trajectory("5,5\n4,6\n4,6\n").points, ((5, 5), (4, 6)))
        traj = parse_trajectory("0,0\n7,2\n1,9\n")
        self.assertEqual(traj.points[-1], (1, 9))

    def test_diagonal_walk_round_trip(self):
        traj = parse_trajectory("0,0\n1,1\n")
        path = os.path.join(self.tmp, 'diagonal.txt')
        save_trajectory(traj, path)
        self.assertEqual(load_trajectory(path), traj)

    def test_parse_errors(self):
        with self.assertRaisesRegex(FormatError, 'walk.txt:2'):
            parse_trajectory("1,1\none,two\n", source='walk.txt')
        with self.assertRaises(FormatError):
            parse_trajectory("# nothing\n")

    def test_validate_against_grid(self):
        grid = grid_from_rows(['...'])
        Trajectory(((1, 1), (2, 1))).validate(grid)
        with self.assertRaises(InvalidParams):
            Trajectory(((0, 1), (1, 1))).validate(grid)
        with self.assertRaises(OutOfBounds):
            Trajectory(((5, 1), (6, 1))).validate(grid)

    @hypothesis_settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=6))
    def test_file_round_trip(self, anchors):
        text = ''.join(f"{x},{y}\n" for x, y in anchors)
        traj = parse_trajectory(text)
        path = os.path.join(self.tmp, 'walk.txt')
        save_trajectory(traj, path)
        self.assertEqual(load_trajectory(path), traj)
        self.assertEqual(traj[0], anchors[0])
        self.assertEqual(traj[-1], anchors[-1])
