# ====================================
#  VISIBILITY  👁️
# ====================================
"""
Isovists on occupancy grids.

compute_isovist runs recursive shadow casting over the eight octants around
the observer. A floor cell is lit when the segment between the two cell
centers touches no wall square, corners included. line_of_sight tests the
same rule one ray at a time with a supercover line and serves as the
reference for the shadow caster.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from gridworld.grid import FLOOR, GridCoord
from utils.exceptions import InvalidParams, OriginNotFloor, OutOfBounds

logger = logging.getLogger(__name__)

# (xx, xy, yx, yy): dx = depth * xx + col * xy, dy = depth * yx + col * yy
OCTANTS = (
    (1, 0, 0, 1),
    (1, 0, 0, -1),
    (-1, 0, 0, 1),
    (-1, 0, 0, -1),
    (0, 1, 1, 0),
    (0, -1, 1, 0),
    (0, 1, -1, 0),
    (0, -1, -1, 0),
)


@dataclass(frozen=True, eq=False)
class Isovist:
    """
    window[v, u] is 1 for visible floor; the window center is the observer.
    origin is the world position of the center (None for frames read back
    from a dataset).
    """
    window: np.ndarray
    radius: int
    origin: GridCoord = None

    def __post_init__(self):
        window = np.ascontiguousarray(self.window, dtype=np.uint8)
        size = 2 * self.radius + 1
        if window.shape != (size, size):
            raise InvalidParams(f"Isovist window must be {size}x{size}, got {window.shape}")
        window.setflags(write=False)
        object.__setattr__(self, 'window', window)

    @property
    def size(self):
        return self.window.shape[0]

    @property
    def visible_count(self):
        return int(self.window.sum())

    def world_cells(self):
        """World coordinates of all 1-cells"""
        vs, us = np.nonzero(self.window)
        return [GridCoord(self.origin.x + int(u) - self.radius, self.origin.y + int(v) - self.radius)
                for v, u in zip(vs, us)]

    def __eq__(self, other):
        if not isinstance(other, Isovist):
            return NotImplemented
        return (self.radius == other.radius and self.origin == other.origin
                and np.array_equal(self.window, other.window))

    def __hash__(self):
        return hash((self.radius, self.origin, self.window.tobytes()))


def _check_bounds(grid, p):
    if not grid.in_bounds(p):
        raise OutOfBounds(f"{tuple(p)} is outside the {grid.width}x{grid.height} grid")


def within_range(dx, dy, radius):
    """Euclidean distance <= radius + 0.5, in integers"""
    return 4 * (dx * dx + dy * dy) <= (2 * radius + 1) ** 2


# ====================================
#  LINE OF SIGHT ORACLE
# ====================================
def supercover_line(a, b, corners=True):
    """
    Every cell the segment between the centers of a and b passes through.
    When the segment crosses a cell corner exactly, both cells touching the
    corner are included; with corners=False the line steps diagonally
    instead, so consecutive cells are always 8-adjacent.
    """
    x, y = a
    dx, dy = b[0] - a[0], b[1] - a[1]
    nx, ny = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1

    cells = [GridCoord(x, y)]
    ix = iy = 0
    while ix < nx or iy < ny:
        decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx
        if decision == 0:
            if corners:
                cells.append(GridCoord(x + sx, y))
                cells.append(GridCoord(x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        cells.append(GridCoord(x, y))
    return cells


def line_of_sight(grid, a, b):
    _check_bounds(grid, a)
    _check_bounds(grid, b)
    cells = grid.cells
    if cells[b[1], b[0]] != FLOOR:
        return False
    return all(cells[c.y, c.x] == FLOOR for c in supercover_line(a, b) if c != b)


def oracle_isovist(grid, origin, radius):
    """Isovist computed cell by cell with line_of_sight (slow, for checks)"""
    _check_bounds(grid, origin)
    if grid.cells[origin[1], origin[0]] != FLOOR:
        raise OriginNotFloor(f"Observer at {tuple(origin)} is not on floor")
    size = 2 * radius + 1
    window = np.zeros((size, size), dtype=np.uint8)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            target = GridCoord(origin[0] + dx, origin[1] + dy)
            if not within_range(dx, dy, radius) or not grid.in_bounds(target):
                continue
            if line_of_sight(grid, origin, target):
                window[dy + radius, dx + radius] = 1
    return Isovist(window, radius, GridCoord(*origin))


# ====================================
#  SHADOW CASTING
# ====================================
def _less(a, b):
    """a < b for slopes stored as (numerator, positive denominator)"""
    return a[0] * b[1] < b[0] * a[1]


def compute_isovist(grid, origin, radius):
    _check_bounds(grid, origin)
    if radius < 1:
        raise InvalidParams(f"Isovist radius must be >= 1, got {radius}")
    ox, oy = origin
    cells = grid.cells
    if cells[oy, ox] != FLOOR:
        raise OriginNotFloor(f"Observer at {tuple(origin)} is not on floor")

    width, height = grid.width, grid.height
    size = 2 * radius + 1
    window = np.zeros((size, size), dtype=np.uint8)
    window[radius, radius] = 1

    for xx, xy, yx, yy in OCTANTS:

        def is_wall(depth, col):
            x = ox + depth * xx + col * xy
            y = oy + depth * yx + col * yy
            if x < 0 or y < 0 or x >= width or y >= height:
                return True
            return bool(cells[y, x] != FLOOR)

        def reveal(depth, col):
            dx = depth * xx + col * xy
            dy = depth * yx + col * yy
            if within_range(dx, dy, radius):
                window[dy + radius, dx + radius] = 1

        # Light is an open slope interval (start, end). A wall at (depth, col)
        # blocks the closed interval of slopes whose ray touches its square,
        # from (2col-1)/(2depth+1) to (2col+1)/(2depth-1).
        def scan(depth, start, end):
            if depth > radius:
                return
            (s_num, s_den), (e_num, e_den) = start, end
            lo_col = (s_num * (2 * depth - 1) - s_den) // (2 * s_den) + 1
            hi_col = -(-(e_num * (2 * depth + 1) + e_den) // (2 * e_den)) - 1

            open_start = start
            for col in range(lo_col, hi_col + 1):
                if is_wall(depth, col):
                    wall_lo = (2 * col - 1, 2 * depth + 1)
                    wall_hi = (2 * col + 1, 2 * depth - 1)
                    if _less(open_start, wall_lo):
                        scan(depth + 1, open_start, wall_lo if _less(wall_lo, end) else end)
                    if _less(open_start, wall_hi):
                        open_start = wall_hi
                    continue
                if col < 0 or col > depth:
                    continue
                cell = (col, depth)
                if not (_less(start, cell) and _less(cell, end)):
                    continue
                # the diagonal ray passes the corner of the cell beside it
                if col == depth and is_wall(depth, col - 1):
                    continue
                reveal(depth, col)
            if _less(open_start, end):
                scan(depth + 1, open_start, end)

        # start just below slope 0 and end just above slope 1 so both
        # octant edges stay inside the open interval
        margin = 2 * radius + 2
        end = (1, 1) if is_wall(0, 1) else (margin + 1, margin)
        scan(1, (-1, margin), end)

    return Isovist(window, radius, GridCoord(ox, oy))


# ====================================
#  ROTATION
# ====================================
def rotate_isovist(iso, heading):
    """
    Rotate into walking direction: output cell (u, v) samples the input at
    (u, v) rotated about the center by +heading (nearest neighbour). A heading
    pointing along +x therefore leaves the window unchanged, and any heading
    ends up pointing to the right of the output window.
    """
    if not math.isfinite(heading):
        raise InvalidParams(f"Heading must be finite, got {heading}")
    radius = iso.radius
    size = iso.size
    offsets = np.arange(size) - radius
    du, dv = np.meshgrid(offsets, offsets)

    cos_h, sin_h = math.cos(heading), math.sin(heading)
    src_u = np.rint(du * cos_h - dv * sin_h).astype(np.int64) + radius
    src_v = np.rint(du * sin_h + dv * cos_h).astype(np.int64) + radius
    inside = (src_u >= 0) & (src_u < size) & (src_v >= 0) & (src_v < size)

    rotated = np.zeros_like(iso.window)
    rotated[inside] = iso.window[src_v[inside], src_u[inside]]
    return Isovist(rotated, radius, iso.origin)


def agreement(first, second):
    """Fraction of window cells on which two isovists agree"""
    return float(np.mean(first.window == second.window))
