# utils/testing.py
"""Shared fixtures for the isoseq test suites."""
import numpy as np

from gridworld.grid import FLOOR, WALL, OccupancyGrid, pad_with_walls


def toy_floorplan(size=62):
    """
    Deterministic office-like plan (size x size interior plus wall border):
    a corridor wall with two doors, a side room and a few pillars.
    """
    cells = np.full((size, size), FLOOR, dtype=np.uint8)
    middle = size // 2
    cells[middle, :] = WALL
    cells[middle, size // 5:size // 5 + 3] = FLOOR
    cells[middle, 3 * size // 4:3 * size // 4 + 3] = FLOOR
    cells[:middle, size // 3] = WALL
    cells[middle // 2:middle // 2 + 3, size // 3] = FLOOR
    for y in range(middle + 6, size - 4, 8):
        for x in range(6, size - 4, 10):
            cells[y:y + 2, x:x + 2] = WALL
    return OccupancyGrid(pad_with_walls(cells), padded=True)


def random_grid(rng, width, height, wall_fraction=0.2):
    """Padded grid with independent random walls"""
    cells = (rng.random((height, width)) >= wall_fraction).astype(np.uint8)
    return OccupancyGrid(pad_with_walls(cells), padded=True)
