# ====================================
#  TRAJECTORY SYNTHESIS  🎲
# ====================================
import logging

import numpy as np
from django.conf import settings

from utils.exceptions import ExhaustedRetries, InvalidParams, Unreachable
from .graph import build_route_graph, dijkstra_shortest_path

logger = logging.getLogger(__name__)


def trajectory_rng(seed, index):
    """Generator for trajectory ``index``: seed_i = mix(seed, i) via SeedSequence"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_random_trajectories(grid, count, seed, max_retries=None, graph=None):
    """
    Shortest paths between uniformly drawn distinct FLOOR start/goal pairs.

    Each trajectory draws from its own generator derived from (seed, index),
    so results do not depend on how many draws earlier trajectories needed.
    Unreachable pairs are redrawn up to ``max_retries`` times.
    """
    if count < 1:
        raise InvalidParams(f"Trajectory count must be >= 1, got {count}")
    floor_cells = grid.floor_cells()
    if len(floor_cells) < 2:
        raise InvalidParams("Need at least two floor cells to sample trajectories")
    if max_retries is None:
        max_retries = settings.MAX_PATH_RETRIES
    graph = graph or build_route_graph(grid)

    trajectories = []
    for index in range(count):
        rng = trajectory_rng(seed, index)
        for attempt in range(max_retries):
            start_i, goal_i = rng.choice(len(floor_cells), size=2, replace=False)
            start, goal = floor_cells[start_i], floor_cells[goal_i]
            try:
                trajectories.append(dijkstra_shortest_path(graph, start, goal))
                break
            except Unreachable:
                logger.debug(f"Trajectory {index}: {tuple(start)} -> {tuple(goal)} unreachable, redrawing")
        else:
            logger.warning(f"Trajectory {index}: no reachable pair after {max_retries} draws")
            raise ExhaustedRetries(f"No reachable start/goal pair found in {max_retries} draws for trajectory {index}")

    logger.info(f"Sampled {len(trajectories)} trajectories (seed={seed})")
    return trajectories
