# utils/binio.py
"""Little helpers shared by the IGRD, ISQ1 and IVAE binary formats."""
from contextlib import contextmanager
import logging
import struct

import numpy as np

from .exceptions import FormatError, IoError

logger = logging.getLogger(__name__)


def read_exact(stream, size, what):
    """Read exactly ``size`` bytes or fail with FormatError naming ``what``"""
    data = stream.read(size)
    if len(data) != size:
        raise FormatError(f"Truncated file: expected {size} bytes of {what}, got {len(data)}")
    return data


def read_struct(stream, fmt, what):
    return struct.unpack(fmt, read_exact(stream, struct.calcsize(fmt), what))


def pack_bits(mask):
    """Bit-pack a binary array in row-major order, most significant bit first"""
    return np.packbits(np.asarray(mask, dtype=bool).ravel()).tobytes()


def unpack_bits(data, shape):
    count = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=count)
    return bits.reshape(shape).astype(np.uint8)


def packed_size(shape):
    return (int(np.prod(shape)) + 7) // 8


@contextmanager
def open_binary(path, mode):
    """open() that reports OSError as IoError"""
    try:
        handle = open(path, mode)
    except OSError as e:
        logger.error(f"Cannot open {path}: {e}")
        raise IoError(f"Cannot open {path}: {e}") from e
    try:
        with handle:
            yield handle
    except OSError as e:
        logger.error(f"I/O failure on {path}: {e}")
        raise IoError(f"I/O failure on {path}: {e}") from e
