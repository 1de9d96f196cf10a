# ====================================
#  TRAJECTORIES  🚶
# ====================================
from dataclasses import dataclass
import logging
import math

from gridworld.grid import FLOOR, GridCoord
from utils.binio import open_binary
from utils.exceptions import FormatError, InvalidParams, OutOfBounds
from visibility.isovist import supercover_line

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def is_adjacent(a, b):
    """8-adjacency (distinct cells)"""
    return a != b and abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


def step_weight(a, b):
    return SQRT2 if a[0] != b[0] and a[1] != b[1] else 1.0


@dataclass(frozen=True)
class Trajectory:
    """Ordered grid positions; consecutive points are 8-adjacent"""
    points: tuple

    def __post_init__(self):
        points = tuple(GridCoord(int(p[0]), int(p[1])) for p in self.points)
        if not points:
            raise InvalidParams("A trajectory needs at least one point")
        for a, b in zip(points, points[1:]):
            if not is_adjacent(a, b):
                raise InvalidParams(f"Trajectory points {tuple(a)} and {tuple(b)} are not adjacent")
        object.__setattr__(self, 'points', points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, index):
        return self.points[index]

    def __iter__(self):
        return iter(self.points)

    @property
    def weight(self):
        """Path length with 1 per orthogonal and sqrt(2) per diagonal step"""
        return sum(step_weight(a, b) for a, b in zip(self.points, self.points[1:]))

    def reversed(self):
        return Trajectory(tuple(reversed(self.points)))

    def validate(self, grid):
        """Check every point lies on FLOOR of ``grid``"""
        for p in self.points:
            if not grid.in_bounds(p):
                raise OutOfBounds(f"Trajectory point {tuple(p)} is outside the grid")
            if grid.cells[p.y, p.x] != FLOOR:
                raise InvalidParams(f"Trajectory point {tuple(p)} is not on floor")
        return self


def heading_at(traj, index):
    """
    Walking direction at ``index`` in image coordinates (x right, y down):
    atan2 of the central difference for interior points, of the single
    adjacent segment at the ends.
    """
    points = traj.points
    if not 0 <= index < len(points):
        raise InvalidParams(f"Index {index} outside trajectory of length {len(points)}")
    if len(points) < 2:
        raise InvalidParams("Heading needs a trajectory of at least two points")
    before = points[max(index - 1, 0)]
    after = points[min(index + 1, len(points) - 1)]
    return math.atan2(after.y - before.y, after.x - before.x)


# ====================================
#  HAND-DRAWN TRAJECTORY FILES
# ====================================
def parse_trajectory(text, source='<text>'):
    """
    One "x,y" pair per line, '#' starts a comment. Non-adjacent consecutive
    points are joined by a line that steps diagonally through cell corners;
    repeated points are dropped.
    """
    anchors = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            x_text, y_text = line.split(',')
            anchors.append(GridCoord(int(x_text), int(y_text)))
        except ValueError as e:
            raise FormatError(f"{source}:{number}: expected 'x,y', got {raw.strip()!r}") from e
    if not anchors:
        raise FormatError(f"{source}: no points")

    points = [anchors[0]]
    for target in anchors[1:]:
        if target == points[-1]:
            continue
        if is_adjacent(points[-1], target):
            points.append(target)
            continue
        points.extend(supercover_line(points[-1], target, corners=False)[1:])
    if len(points) != len(anchors):
        logger.debug(f"{source}: interpolated {len(anchors)} anchors into {len(points)} points")
    return Trajectory(tuple(points))


def load_trajectory(path):
    with open_binary(path, 'rb') as handle:
        data = handle.read()
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: not a text file") from e
    return parse_trajectory(text, source=str(path))


def format_trajectory(traj):
    return ''.join(f"{p.x},{p.y}\n" for p in traj.points)


def save_trajectory(traj, path):
    with open_binary(path, 'wb') as handle:
        handle.write(format_trajectory(traj).encode('utf-8'))
