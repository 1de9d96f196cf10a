# ====================================
#  ISQ1 DATASETS  💾
# ====================================
"""
Binary dataset of isovist sequences.

Layout (little-endian):
    magic b'ISQ1', version byte
    t, s, W, count as uint32
    count records of:
        center x, y as int32
        heading as float64
        t frames, each W*W bits packed row-major, MSB first, in time order
"""
from dataclasses import dataclass, field
import logging
import struct

import numpy as np

from utils.binio import open_binary, pack_bits, packed_size, read_exact, read_struct, unpack_bits
from utils.exceptions import EmptyInput, FormatError, HeaderMismatch, InvalidParams
from .extract import IsovistSequence, validate_sequence_params

logger = logging.getLogger(__name__)

DATASET_MAGIC = b'ISQ1'
DATASET_VERSION = 1

HEADER_FORMAT = '<IIII'
RECORD_FORMAT = '<iid'


@dataclass(eq=False)
class Dataset:
    t: int
    s: int
    window: int
    records: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.records)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def frames(self):
        """All frames as an array shaped (count, t, W, W)"""
        if not self.records:
            return np.zeros((0, self.t, self.window, self.window), dtype=np.uint8)
        return np.stack([record.frames for record in self.records])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return ((self.t, self.s, self.window) == (other.t, other.s, other.window)
                and self.records == other.records)

    def __str__(self):
        return f"Dataset t={self.t} s={self.s} W={self.window} ({self.count} sequences)"


def dataset_from_sequences(sequences):
    """Wrap sequences into a Dataset, checking they share t, s and W"""
    sequences = list(sequences)
    if not sequences:
        raise EmptyInput("No sequences to store")
    first = sequences[0]
    for index, sequence in enumerate(sequences):
        if (sequence.t, sequence.s, sequence.window) != (first.t, first.s, first.window):
            raise HeaderMismatch(
                f"Sequence {index} has t={sequence.t} s={sequence.s} W={sequence.window}, "
                f"expected t={first.t} s={first.s} W={first.window}"
            )
    return Dataset(first.t, first.s, first.window, sequences)


def write_dataset(sequences, path):
    dataset = sequences if isinstance(sequences, Dataset) else dataset_from_sequences(sequences)
    with open_binary(path, 'wb') as handle:
        handle.write(DATASET_MAGIC)
        handle.write(struct.pack('<B', DATASET_VERSION))
        handle.write(struct.pack(HEADER_FORMAT, dataset.t, dataset.s, dataset.window, dataset.count))
        for record in dataset.records:
            if (record.t, record.s, record.window) != (dataset.t, dataset.s, dataset.window):
                raise HeaderMismatch(f"{record} does not match {dataset}")
            handle.write(struct.pack(RECORD_FORMAT, record.center.x, record.center.y, record.heading))
            for frame in record.frames:
                handle.write(pack_bits(frame))
    logger.info(f"Wrote {dataset} to {path}")
    return dataset


def read_dataset_header(stream):
    magic = read_exact(stream, 4, 'dataset magic')
    if magic != DATASET_MAGIC:
        raise FormatError(f"Bad dataset magic {magic!r}")
    (version,) = read_struct(stream, '<B', 'dataset version')
    if version != DATASET_VERSION:
        raise FormatError(f"Unsupported dataset version {version}")
    t, s, window, count = read_struct(stream, HEADER_FORMAT, 'dataset header')
    try:
        validate_sequence_params(t, s)
    except InvalidParams as e:
        raise FormatError(f"Dataset header is inconsistent: {e}") from e
    if window < 1:
        raise FormatError(f"Dataset header declares window size {window}")
    return t, s, window, count


def read_dataset(path):
    with open_binary(path, 'rb') as handle:
        t, s, window, count = read_dataset_header(handle)
        frame_bytes = packed_size((window, window))
        records = []
        for _ in range(count):
            x, y, heading = read_struct(handle, RECORD_FORMAT, 'record header')
            frames = np.stack([
                unpack_bits(read_exact(handle, frame_bytes, 'frame'), (window, window))
                for _ in range(t)
            ])
            records.append(IsovistSequence(frames=frames, center=(x, y), spacing=s, heading=heading))
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after {count} records")
    dataset = Dataset(t, s, window, records)
    logger.info(f"Read {dataset} from {path}")
    return dataset
