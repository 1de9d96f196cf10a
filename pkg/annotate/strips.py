# ====================================
#  LATENT SAMPLING STRIPS  🎞️
# ====================================
"""
Decoded latent samples rendered as image strips.

Every column is one sequence with time running upward (earliest frame at
the bottom) and the walking direction pointing right. Pixels use the
certainty colorbar. render_strip adds a key row under the frames with each
column's trajectory-annotation color.
"""
from dataclasses import dataclass
from io import BytesIO
import logging

import numpy as np
from PIL import Image

from utils.exceptions import EmptyInput, InvalidParams, ShapeMismatch, UnsupportedLatentDim
from vae_model.network import decode
from .colors import certainty_image, hue_color

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentSample:
    z: np.ndarray
    frames: np.ndarray   # (t, W, W) probabilities


def _decode_all(model, zs):
    probs = decode(model, zs)[:, :, 0]
    return [LatentSample(z=z, frames=frames) for z, frames in zip(zs, probs)]


def sample_latent_grid(model, k, range_lo, range_hi):
    """Decode k equally spaced codes from range_lo to range_hi inclusive (d = 1 only)"""
    if model.config.latent_dim != 1:
        raise UnsupportedLatentDim(
            f"Regular latent sampling needs a 1-d latent space, the model has d={model.config.latent_dim}"
        )
    if k < 2:
        raise InvalidParams(f"Need at least two latent samples, got {k}")
    if not range_lo < range_hi:
        raise InvalidParams(f"Latent range [{range_lo}, {range_hi}] is empty")
    zs = np.linspace(range_lo, range_hi, k).reshape(k, 1)
    logger.info(f"Decoding {k} latent samples over [{range_lo}, {range_hi}]")
    return _decode_all(model, zs)


def sample_latent_random(model, k, seed):
    """Decode k codes drawn from the standard normal prior, ordered by their first dimension"""
    if k < 1:
        raise InvalidParams(f"Need at least one latent sample, got {k}")
    zs = np.random.default_rng(seed).standard_normal((k, model.config.latent_dim))
    zs = zs[np.argsort(zs[:, 0], kind='stable')]
    return _decode_all(model, zs)


def latent_range_from_points(points):
    """(min, max) of the 1-d latents of annotated points"""
    if not points:
        raise EmptyInput("No annotated points to take a latent range from")
    values = np.array([np.ravel(point.latent) for point in points])
    if values.shape[1] != 1:
        raise UnsupportedLatentDim(f"Latent range needs 1-d latents, got d={values.shape[1]}")
    return float(values.min()), float(values.max())


def _column(frames):
    """(t*W, W) with the earliest frame at the bottom"""
    return np.concatenate(list(frames[::-1]), axis=0)


def _frame_stacks(samples):
    stacks = [np.asarray(getattr(sample, 'frames', sample), dtype=np.float64) for sample in samples]
    if not stacks:
        raise EmptyInput("Nothing to render")
    shape = stacks[0].shape
    for stack in stacks:
        if stack.ndim != 3 or stack.shape != shape:
            raise ShapeMismatch(f"Strip columns must share one (t, W, W) shape, got {stack.shape} and {shape}")
    return stacks


def _png(rgb, scale):
    image = Image.fromarray(rgb)
    if scale > 1:
        image = image.resize((image.width * scale, image.height * scale), Image.Resampling.NEAREST)
    buffer = BytesIO()
    image.save(buffer, format='PNG')
    return buffer.getvalue()


def render_strip(samples, key_colors=None, scale=1):
    """
    Columns are the samples in order. ``key_colors`` gives each column's
    RGBA key; by default the hue map is spread evenly over the columns, which
    matches the annotation colors when the grid spans the annotated range.
    """
    stacks = _frame_stacks(samples)
    count = len(stacks)
    window = stacks[0].shape[1]
    if key_colors is None:
        key_colors = [hue_color(i / (count - 1) if count > 1 else 0.5) for i in range(count)]
    if len(key_colors) != count:
        raise ShapeMismatch(f"{len(key_colors)} key colors for {count} columns")

    frames = certainty_image(np.concatenate([_column(stack) for stack in stacks], axis=1))
    key = np.zeros((max(1, window // 2), count * window, 3), dtype=np.uint8)
    for i, color in enumerate(key_colors):
        key[:, i * window:(i + 1) * window] = color[:3]
    return _png(np.concatenate([frames, key], axis=0), scale)


def render_comparison(inputs, reconstructions, scale=1):
    """Each input sequence (binary) beside its reconstruction, no key row"""
    inputs, reconstructions = _frame_stacks(inputs), _frame_stacks(reconstructions)
    if len(inputs) != len(reconstructions) or inputs[0].shape != reconstructions[0].shape:
        raise ShapeMismatch("Inputs and reconstructions must pair up with equal shapes")
    columns = []
    for source, output in zip(inputs, reconstructions):
        columns.extend([_column(source), _column(output)])
    return _png(certainty_image(np.concatenate(columns, axis=1)), scale)
