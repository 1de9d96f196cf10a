# ====================================
#  TRAJECTORY ANNOTATION  🖍️
# ====================================
from dataclasses import dataclass
from io import BytesIO
import logging

import numpy as np
from PIL import Image

from gridworld.grid import GridCoord
from sequences.extract import extract_sequences, footprint
from utils.binio import open_binary
from utils.exceptions import EmptyInput, FormatError, InvalidParams, OutOfBounds, TrajectoryTooShort
from vae_model.network import predict_latents
from .colors import latent_colors, rgba_hex

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnotatedPoint:
    position: GridCoord
    latent: np.ndarray
    color: tuple   # RGBA

    def sidecar_line(self):
        values = [str(self.position.x), str(self.position.y)] + [repr(float(v)) for v in np.ravel(self.latent)]
        return ','.join(values + [rgba_hex(self.color)])


def annotate_trajectories(model, grid, trajectories, t, s, radius, sources=None):
    """
    Latent mean at the center pixel of every sequence along every
    trajectory, colored after normalizing over the whole point set.
    ``sources`` names the trajectories in error messages.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise EmptyInput("No trajectories to annotate")
    sources = sources or [f"trajectory {i}" for i in range(len(trajectories))]
    span = footprint(t, s)

    sequences = []
    for traj, source in zip(trajectories, sources):
        traj.validate(grid)
        if len(traj) < max(span, 2):
            raise TrajectoryTooShort(f"{source}: {len(traj)} points, a sequence needs {span}")
        sequences.extend(extract_sequences(traj, grid, t, s, radius))

    latents = predict_latents(model, sequences)
    colors = latent_colors(latents)
    points = [
        AnnotatedPoint(position=sequence.center, latent=latent, color=color)
        for sequence, latent, color in zip(sequences, latents, colors)
    ]
    logger.info(f"Annotated {len(points)} points on {len(trajectories)} trajectories")
    return points


def render_overlay(grid, points, scale=1):
    """Floor plan (FLOOR white, WALL black) with each point as a scale x scale colored square"""
    if scale < 1:
        raise InvalidParams(f"Overlay scale must be >= 1, got {scale}")
    base = (grid.cells * 255).astype(np.uint8)
    rgb = np.repeat(np.repeat(base, scale, axis=0), scale, axis=1)
    image = np.stack([rgb] * 3, axis=-1)
    for point in points:
        x, y = point.position
        if not grid.in_bounds((x, y)):
            raise OutOfBounds(f"Annotated point {(x, y)} is outside the {grid.width}x{grid.height} grid")
        image[y * scale:(y + 1) * scale, x * scale:(x + 1) * scale] = point.color[:3]

    buffer = BytesIO()
    Image.fromarray(image).save(buffer, format='PNG')
    return buffer.getvalue()


def format_sidecar(points):
    return ''.join(point.sidecar_line() + '\n' for point in points)


def write_sidecar(points, path):
    """One 'x,y,z_0,..,z_{d-1},#RRGGBBAA' line per point"""
    with open_binary(path, 'wb') as handle:
        handle.write(format_sidecar(points).encode('ascii'))
    logger.info(f"Wrote {len(points)} annotations to {path}")


def read_sidecar(path):
    """Annotated points back from a sidecar listing"""
    with open_binary(path, 'rb') as handle:
        text = handle.read().decode('ascii', errors='replace')
    points = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        *fields, color = line.strip().split(',')
        try:
            x, y, *latent = fields
            rgba = bytes.fromhex(color.lstrip('#'))
            if len(rgba) != 4 or not color.startswith('#') or not latent:
                raise ValueError(color)
            points.append(AnnotatedPoint(GridCoord(int(x), int(y)), np.array([float(v) for v in latent]), tuple(rgba)))
        except ValueError as e:
            raise FormatError(f"{path}:{number}: bad annotation line {line.strip()!r}") from e
    return points
