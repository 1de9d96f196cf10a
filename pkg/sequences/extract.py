# ====================================
#  ISOVIST SEQUENCES  🎞️
# ====================================
"""
Isovist sequences along trajectories.

A sequence holds t = 2m + 1 isovists taken every s pixels, so it covers
footprint(t, s) = t*s - (s - 1) trajectory pixels. Windows slide along the
trajectory with stride 1; the sequence is reported at its middle pixel,
index (footprint - 1) / 2 of the window (0-based).
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from gridworld.grid import GridCoord
from pathgen.trajectory import heading_at
from utils.exceptions import InvalidParams, TrajectoryTooShort
from visibility.isovist import compute_isovist, rotate_isovist

logger = logging.getLogger(__name__)


def validate_sequence_params(t, s):
    if t < 1 or t % 2 == 0:
        raise InvalidParams(f"Sequence length t must be odd and >= 1, got {t}")
    if s < 1:
        raise InvalidParams(f"Spacing s must be >= 1, got {s}")


def footprint(t, s):
    """Trajectory pixels covered by one sequence"""
    validate_sequence_params(t, s)
    return t * s - (s - 1)


def sequence_count(length, t, s):
    return max(0, length - footprint(t, s) + 1)


@dataclass(eq=False)
class IsovistSequence:
    """
    frames[k] is the rotated isovist window of time step k (earliest first);
    origins are the frame positions when known (not persisted).
    """
    frames: np.ndarray
    center: GridCoord
    spacing: int
    heading: float
    origins: tuple = field(default=None)

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.uint8)
        if frames.ndim != 3 or frames.shape[1] != frames.shape[2]:
            raise InvalidParams(f"Frames must be shaped (t, W, W), got {frames.shape}")
        validate_sequence_params(frames.shape[0], self.spacing)
        self.frames = frames
        self.center = GridCoord(int(self.center[0]), int(self.center[1]))
        self.heading = float(self.heading)

    @property
    def t(self):
        return self.frames.shape[0]

    @property
    def s(self):
        return self.spacing

    @property
    def window(self):
        return self.frames.shape[1]

    def __eq__(self, other):
        if not isinstance(other, IsovistSequence):
            return NotImplemented
        return (self.center == other.center and self.spacing == other.spacing
                and self.heading == other.heading and np.array_equal(self.frames, other.frames))

    def __str__(self):
        return f"IsovistSequence t={self.t} s={self.s} W={self.window} at {tuple(self.center)}"


def rotated_isovists(traj, grid, radius, indices=None):
    """Isovist at each requested trajectory index, rotated by the heading there"""
    indices = range(len(traj)) if indices is None else indices
    return {
        i: rotate_isovist(compute_isovist(grid, traj[i], radius), heading_at(traj, i))
        for i in indices
    }


def extract_sequences(traj, grid, t, s, radius, cache=None):
    """One sequence per window start k; frames at k, k+s, ..., k+(t-1)s"""
    span = footprint(t, s)
    if len(traj) < span:
        raise TrajectoryTooShort(
            f"Trajectory of length {len(traj)} is shorter than the sequence footprint {span}"
        )
    if len(traj) < 2:
        raise TrajectoryTooShort("A trajectory needs at least two points")

    isovists = cache if cache is not None else rotated_isovists(traj, grid, radius)
    middle = (span - 1) // 2
    sequences = []
    for k in range(len(traj) - span + 1):
        indices = [k + step * s for step in range(t)]
        frames = np.stack([isovists[i].window for i in indices])
        center_index = k + middle
        sequences.append(IsovistSequence(
            frames=frames,
            center=traj[center_index],
            spacing=s,
            heading=heading_at(traj, center_index),
            origins=tuple(traj[i] for i in indices),
        ))
    return sequences


def sequences_for_trajectories(trajectories, grid, t, s, radius, skip_short=True):
    """
    Extract from many trajectories, computing each isovist once per
    trajectory index. Trajectories shorter than the footprint are skipped
    (or rejected when ``skip_short`` is False).
    """
    span = footprint(t, s)
    sequences = []
    skipped = 0
    for traj in trajectories:
        if len(traj) < max(span, 2):
            if not skip_short:
                raise TrajectoryTooShort(
                    f"Trajectory of length {len(traj)} is shorter than the sequence footprint {span}"
                )
            skipped += 1
            continue
        sequences.extend(extract_sequences(traj, grid, t, s, radius, cache=rotated_isovists(traj, grid, radius)))
    if skipped:
        logger.info(f"Skipped {skipped} trajectories shorter than the footprint {span}")
    return sequences
