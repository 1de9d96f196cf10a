# ====================================
#  IVAE CHECKPOINTS  💾
# ====================================
"""
Model checkpoints.

Layout (little-endian):
    magic b'IVAE', version byte
    t, W, filters, gru hidden, latent dim as uint32; beta as float64
    every parameter tensor in param_shapes() order as float64, row-major
"""
import logging
import struct

import numpy as np

from utils.binio import open_binary, read_exact, read_struct
from utils.exceptions import FormatError, InvalidParams
from .network import VaeConfig, VaeModel, param_shapes

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'IVAE'
CHECKPOINT_VERSION = 1
CONFIG_FORMAT = '<IIIIId'


def save_checkpoint(model, path):
    config = model.config
    with open_binary(path, 'wb') as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack('<B', CHECKPOINT_VERSION))
        handle.write(struct.pack(CONFIG_FORMAT, config.t, config.window, config.filters,
                                 config.gru_hidden, config.latent_dim, config.beta))
        for name in param_shapes(config):
            handle.write(np.ascontiguousarray(model.params[name], dtype='<f8').tobytes())
    logger.info(f"Saved {model} to {path}")


def read_checkpoint_header(stream):
    magic = read_exact(stream, 4, 'checkpoint magic')
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"Bad checkpoint magic {magic!r}")
    (version,) = read_struct(stream, '<B', 'checkpoint version')
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}")
    t, window, filters, hidden, latent_dim, beta = read_struct(stream, CONFIG_FORMAT, 'checkpoint config')
    try:
        return VaeConfig(t=t, window=window, latent_dim=latent_dim, gru_hidden=hidden, beta=beta, filters=filters)
    except InvalidParams as e:
        raise FormatError(f"Checkpoint config is inconsistent: {e}") from e


def load_checkpoint(path):
    with open_binary(path, 'rb') as handle:
        config = read_checkpoint_header(handle)
        params = {}
        for name, shape in param_shapes(config).items():
            size = int(np.prod(shape))
            data = read_exact(handle, size * 8, name)
            params[name] = np.frombuffer(data, dtype='<f8').astype(np.float64).reshape(shape)
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after the last parameter tensor")
    model = VaeModel(config, params)
    logger.info(f"Loaded {model} from {path}")
    return model
