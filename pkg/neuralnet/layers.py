# ====================================
#  LAYERS  🧱
# ====================================
"""
Forward / backward pairs for the layers of the isovist auto-encoder.

Tensors are float64 numpy arrays. Spatial layers work on batches shaped
(N, C, H, W); a single (C, H, W) tensor is accepted and returned unbatched.
Every *_forward returns (output, cache) and the matching *_backward takes
the upstream gradient and that cache.
"""
from dataclasses import dataclass
import logging

import numpy as np

from utils.exceptions import InvalidParams, ShapeMismatch

logger = logging.getLogger(__name__)

KERNEL = 3


@dataclass
class ConvParams:
    weight: np.ndarray   # (C_out, C_in, 3, 3)
    bias: np.ndarray     # (C_out,)


@dataclass
class DenseParams:
    weight: np.ndarray   # (m, n)
    bias: np.ndarray     # (m,)


def _batched(x, spatial_ndim=3):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == spatial_ndim:
        return x[None], False
    if x.ndim == spatial_ndim + 1:
        return x, True
    raise ShapeMismatch(f"Expected a {spatial_ndim}-d tensor or a batch of them, got shape {x.shape}")


# ====================================
#  CONVOLUTION (3x3, stride 1, zero padding 1)
# ====================================
def conv2d_forward(x, weight, bias):
    x, batched = _batched(x)
    n, channels, height, width = x.shape
    out_channels = weight.shape[0]
    if weight.shape[1:] != (channels, KERNEL, KERNEL) or bias.shape != (out_channels,):
        raise ShapeMismatch(
            f"Kernel {weight.shape} / bias {bias.shape} do not fit input with {channels} channels"
        )

    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    # one (N, H, W, C_out) product per kernel tap; nothing larger than the input is cached
    out = np.zeros((n, height, width, out_channels))
    for i, j in _taps():
        out += np.tensordot(padded[:, :, i:i + height, j:j + width], weight[:, :, i, j], axes=([1], [1]))
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]

    cache = (padded, weight, batched)
    return (out if batched else out[0]), cache


def conv2d_backward(dout, cache):
    padded, weight, batched = cache
    dout = dout if batched else dout[None]
    height, width = padded.shape[2] - 2, padded.shape[3] - 2

    dweight = np.zeros_like(weight)
    dpadded = np.zeros_like(padded)
    for i, j in _taps():
        window = padded[:, :, i:i + height, j:j + width]
        dweight[:, :, i, j] = np.tensordot(dout, window, axes=([0, 2, 3], [0, 2, 3]))
        dpadded[:, :, i:i + height, j:j + width] += np.tensordot(
            dout, weight[:, :, i, j], axes=([1], [0])
        ).transpose(0, 3, 1, 2)
    dbias = dout.sum(axis=(0, 2, 3))
    dx = dpadded[:, :, 1:-1, 1:-1]
    return (dx if batched else dx[0]), dweight, dbias


def _taps():
    return ((i, j) for i in range(KERNEL) for j in range(KERNEL))


def conv2d(x, params):
    return conv2d_forward(x, params.weight, params.bias)[0]


# ====================================
#  MAX POOLING (2x2, ragged edges)
# ====================================
def maxpool2_forward(x):
    """
    Max over non-overlapping 2x2 patches. Odd sizes are padded with -inf,
    so edge patches reduce over the cells they actually cover. Ties go to
    the first cell in row-major patch order.
    """
    x, batched = _batched(x)
    n, channels, height, width = x.shape
    out_h, out_w = -(-height // 2), -(-width // 2)

    padded = np.full((n, channels, 2 * out_h, 2 * out_w), -np.inf)
    padded[:, :, :height, :width] = x
    patches = padded.reshape(n, channels, out_h, 2, out_w, 2).transpose(0, 1, 2, 4, 3, 5)
    patches = patches.reshape(n, channels, out_h, out_w, 4)
    argmax = patches.argmax(axis=-1)
    out = np.take_along_axis(patches, argmax[..., None], axis=-1)[..., 0]

    cache = (x.shape, argmax, batched)
    return (out if batched else out[0]), cache


def maxpool2_backward(dout, cache):
    (n, channels, height, width), argmax, batched = cache
    dout = dout if batched else dout[None]
    out_h, out_w = argmax.shape[2:]

    dpatches = np.zeros((n, channels, out_h, out_w, 4))
    np.put_along_axis(dpatches, argmax[..., None], dout[..., None], axis=-1)
    dpadded = dpatches.reshape(n, channels, out_h, out_w, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = dpadded.reshape(n, channels, 2 * out_h, 2 * out_w)[:, :, :height, :width]
    return dx if batched else dx[0]


def maxpool2(x):
    return maxpool2_forward(x)[0]


# ====================================
#  NEAREST UPSAMPLING AND CROPPING
# ====================================
def upsample2_forward(x):
    x, batched = _batched(x)
    out = x.repeat(2, axis=2).repeat(2, axis=3)
    return (out if batched else out[0]), (x.shape, batched)


def upsample2_backward(dout, cache):
    (n, channels, height, width), batched = cache
    dout = dout if batched else dout[None]
    dx = dout.reshape(n, channels, height, 2, width, 2).sum(axis=(3, 5))
    return dx if batched else dx[0]


def crop_forward(x, height, width):
    """Keep the top-left height x width block"""
    x, batched = _batched(x)
    if x.shape[2] < height or x.shape[3] < width:
        raise ShapeMismatch(f"Cannot crop {x.shape[2:]} to ({height}, {width})")
    out = x[:, :, :height, :width]
    return (out if batched else out[0]), (x.shape, batched)


def crop_backward(dout, cache):
    shape, batched = cache
    dout = dout if batched else dout[None]
    dx = np.zeros(shape)
    dx[:, :, :dout.shape[2], :dout.shape[3]] = dout
    return dx if batched else dx[0]


# ====================================
#  DENSE
# ====================================
def dense_forward(x, weight, bias):
    """W x + b for x shaped (n,) or (N, n)"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise ShapeMismatch(f"Dense weight {weight.shape} / bias {bias.shape} do not fit input {x.shape}")
    return x @ weight.T + bias, (x, weight)


def dense_backward(dout, cache):
    x, weight = cache
    if x.ndim == 1:
        return dout @ weight, np.outer(dout, x), dout.copy()
    return dout @ weight, dout.T @ x, dout.sum(axis=0)


def dense(x, params):
    return dense_forward(x, params.weight, params.bias)[0]


# ====================================
#  ACTIVATIONS
# ====================================
def sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


ACTIVATIONS = ('relu', 'tanh', 'sigmoid')


def activation_forward(x, kind):
    x = np.asarray(x, dtype=np.float64)
    if kind == 'relu':
        out = np.maximum(x, 0.0)
    elif kind == 'tanh':
        out = np.tanh(x)
    elif kind == 'sigmoid':
        out = sigmoid(x)
    else:
        raise InvalidParams(f"Unknown activation {kind!r}, expected one of {ACTIVATIONS}")
    return out, (kind, x, out)


def activation_backward(dout, cache):
    kind, x, out = cache
    if kind == 'relu':
        return dout * (x > 0)
    if kind == 'tanh':
        return dout * (1.0 - out * out)
    return dout * out * (1.0 - out)


def activation(x, kind):
    return activation_forward(x, kind)[0]
