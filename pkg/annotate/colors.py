# ====================================
#  COLOR MAPS  🎨
# ====================================
"""
Latent-to-color and probability-to-color maps.

- Latents are min-max normalized per dimension over a whole point set; a
  dimension with no spread maps to 0.5.
- d = 1 sweeps the hue from 0 (red) to 330 degrees (pink).
- d = 2 uses (dim 0, dim 1, 0.5) as RGB, d >= 3 the first three dimensions.
- Decoder probabilities run black (0, wall) -> green (0.5, unsure) -> white (1, floor).
"""
import logging
import math

import numpy as np
from PIL import ImageColor

from utils.exceptions import EmptyInput

logger = logging.getLogger(__name__)

HUE_SPAN = 330.0
DEGENERATE_VALUE = 0.5
NORMALIZED_DECIMALS = 9


def _channel(value):
    return int(math.floor(value * 255.0 + 0.5))


def normalize_latents(latents):
    latents = np.atleast_2d(np.asarray(latents, dtype=np.float64))
    if latents.shape[0] == 0:
        raise EmptyInput("No latents to normalize")
    low, high = latents.min(axis=0), latents.max(axis=0)
    spread = high - low
    degenerate = spread <= 0
    if degenerate.any():
        logger.warning(f"Latent dimensions {np.flatnonzero(degenerate).tolist()} have no spread, mapping to 0.5")
    safe = np.where(degenerate, 1.0, spread)
    normalized = np.where(degenerate, DEGENERATE_VALUE, (latents - low) / safe)
    # rounding absorbs last-bit differences between affinely related latent sets
    return np.round(np.clip(normalized, 0.0, 1.0), NORMALIZED_DECIMALS)


def hue_color(value):
    red, green, blue = ImageColor.getrgb(f"hsv({HUE_SPAN * float(value):.6f},100%,100%)")
    return red, green, blue, 255


def latent_color(normalized):
    """RGBA for one normalized latent vector"""
    normalized = np.ravel(normalized)
    if normalized.size == 1:
        return hue_color(normalized[0])
    if normalized.size == 2:
        channels = (normalized[0], normalized[1], DEGENERATE_VALUE)
    else:
        channels = normalized[:3]
    return tuple(_channel(c) for c in channels) + (255,)


def latent_colors(latents):
    return [latent_color(row) for row in normalize_latents(latents)]


def certainty_color(p):
    """RGB for a decoder probability, piecewise linear through pure green"""
    return tuple(int(channel) for channel in certainty_image(p))


def certainty_image(values):
    """uint8 RGB array (..., 3) for an array of probabilities"""
    p = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    low = np.floor(510.0 * p + 0.5)
    high = np.floor(510.0 * (p - 0.5) + 0.5)
    rgb = np.zeros(p.shape + (3,))
    upper = p > 0.5
    rgb[..., 0] = np.where(upper, high, 0.0)
    rgb[..., 1] = np.where(upper, 255.0, low)
    rgb[..., 2] = np.where(upper, high, 0.0)
    return rgb.astype(np.uint8)


def rgba_hex(color):
    return '#' + ''.join(f'{channel:02X}' for channel in color)
