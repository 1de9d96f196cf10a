# ====================================
#  GRIDWORLD  🗺️
# ====================================
"""
Binary floor-plan rasters.

Grids are stored row-major with the origin at the top-left corner and y
growing downward, the same convention images use, so renders and isovists
line up with the source plan.
"""
from dataclasses import dataclass
from io import BytesIO
from typing import NamedTuple
import logging
import struct

import numpy as np
from PIL import Image, UnidentifiedImageError

from utils.binio import open_binary, pack_bits, packed_size, read_exact, read_struct, unpack_bits
from utils.exceptions import DecodeError, EmptyImage, FormatError, InvalidParams, OutOfBounds

logger = logging.getLogger(__name__)

FLOOR = 1
WALL = 0

LUMINANCE_THRESHOLD = 0.5

GRID_MAGIC = b'IGRD'


class GridCoord(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    - cells[y, x] is FLOOR (1) or WALL (0)
    - padded marks grids that already carry the 1-pixel WALL border
    """
    cells: np.ndarray
    padded: bool = True

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2 or cells.shape[0] < 3 or cells.shape[1] < 3:
            raise InvalidParams(f"Grid must be at least 3x3, got shape {cells.shape}")
        cells.setflags(write=False)
        object.__setattr__(self, 'cells', cells)

    @property
    def width(self):
        return self.cells.shape[1]

    @property
    def height(self):
        return self.cells.shape[0]

    @property
    def floor_mask(self):
        return self.cells == FLOOR

    @property
    def floor_count(self):
        return int(self.cells.sum())

    def in_bounds(self, p):
        return 0 <= p[0] < self.width and 0 <= p[1] < self.height

    def floor_cells(self):
        """FLOOR coordinates in (y, x) order"""
        ys, xs = np.nonzero(self.cells)
        return [GridCoord(int(x), int(y)) for y, x in zip(ys, xs)]

    def with_cell(self, p, value):
        """Copy of the grid with one cell changed"""
        cells = self.cells.copy()
        cells[p[1], p[0]] = value
        return OccupancyGrid(cells, padded=self.padded)

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.padded == other.padded and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes(), self.padded))

    def __str__(self):
        return f"OccupancyGrid {self.width}x{self.height} ({self.floor_count} floor cells)"


def pad_with_walls(cells):
    return np.pad(np.asarray(cells, dtype=np.uint8), 1, mode='constant', constant_values=WALL)


def grid_from_rows(rows):
    """
    Build a padded grid from text rows: '.' is FLOOR, anything else WALL.
    Handy for tests and hand-made maps.
    """
    cells = np.array([[FLOOR if ch == '.' else WALL for ch in row] for row in rows], dtype=np.uint8)
    return OccupancyGrid(pad_with_walls(cells), padded=True)


# ====================================
#  LOADING
# ====================================
def load_floorplan(image_bytes, scale=1.0):
    """
    Decode a PNG / PGM floor plan into a padded OccupancyGrid.

    Pixels with luminance >= 0.5 become FLOOR. ``scale`` is a plain
    nearest-neighbour resize applied before thresholding.
    """
    try:
        image = Image.open(BytesIO(image_bytes))
        image.load()
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as e:
        raise DecodeError(f"Cannot decode floor plan image: {e}") from e

    if image.width < 1 or image.height < 1:
        raise EmptyImage(f"Floor plan has zero dimension ({image.width}x{image.height})")

    if scale <= 0:
        raise InvalidParams(f"Resize factor must be positive, got {scale}")
    if scale != 1.0:
        size = (max(1, round(image.width * scale)), max(1, round(image.height * scale)))
        image = image.resize(size, Image.Resampling.NEAREST)

    luminance = np.asarray(image.convert('L'), dtype=np.float64) / 255.0
    cells = np.where(luminance >= LUMINANCE_THRESHOLD, FLOOR, WALL).astype(np.uint8)
    grid = OccupancyGrid(pad_with_walls(cells), padded=True)
    logger.debug(f"Decoded floor plan {image.width}x{image.height} -> {grid}")
    return grid


def is_floor(grid, p):
    if not grid.in_bounds(p):
        raise OutOfBounds(f"{tuple(p)} is outside the {grid.width}x{grid.height} grid")
    return bool(grid.cells[p[1], p[0]] == FLOOR)


def render_grid(grid):
    """PNG bytes with FLOOR white and WALL black"""
    image = Image.fromarray((grid.cells * 255).astype(np.uint8))
    buffer = BytesIO()
    image.save(buffer, format='PNG')
    return buffer.getvalue()


# ====================================
#  IGRD FILES
# ====================================
def save_grid(grid, path):
    """
    IGRD layout: magic, width and height as <u4, one padding-flag byte,
    then each row bit-packed on its own (MSB first, 1 = FLOOR).
    """
    with open_binary(path, 'wb') as handle:
        handle.write(GRID_MAGIC)
        handle.write(struct.pack('<IIB', grid.width, grid.height, 1 if grid.padded else 0))
        for row in grid.cells:
            handle.write(pack_bits(row))
    logger.info(f"Saved {grid} to {path}")


def read_grid(stream):
    magic = read_exact(stream, 4, 'grid magic')
    if magic != GRID_MAGIC:
        raise FormatError(f"Bad grid magic {magic!r}")
    width, height, padded = read_struct(stream, '<IIB', 'grid header')
    minimum = 3 if padded else 1
    if width < minimum or height < minimum:
        raise FormatError(f"Grid header declares {width}x{height}, below the {minimum}x{minimum} minimum")
    row_bytes = packed_size((width,))
    rows = [unpack_bits(read_exact(stream, row_bytes, 'grid row'), (width,)) for _ in range(height)]
    cells = np.stack(rows)
    if not padded:
        cells = pad_with_walls(cells)
    return OccupancyGrid(cells, padded=True)


def load_grid(path):
    with open_binary(path, 'rb') as handle:
        return read_grid(handle)


def load_map(path, scale=1.0):
    """Load either an IGRD grid file or a floor-plan image"""
    with open_binary(path, 'rb') as handle:
        data = handle.read()
    if data[:4] == GRID_MAGIC:
        return read_grid(BytesIO(data))
    return load_floorplan(data, scale=scale)
