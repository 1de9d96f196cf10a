import os
import shutil
import struct
import tempfile

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from gridworld.grid import GridCoord
from pathgen.trajectory import Trajectory, heading_at
from utils.exceptions import EmptyInput, FormatError, HeaderMismatch, InvalidParams, TrajectoryTooShort
from utils.testing import toy_floorplan
from visibility.isovist import compute_isovist, rotate_isovist
from .dataset import DATASET_MAGIC, Dataset, dataset_from_sequences, read_dataset, write_dataset
from .extract import (
    IsovistSequence, extract_sequences, footprint, sequence_count, sequences_for_trajectories,
)


def l_walk():
    """Right along y=5, then down along x=10"""
    points = [GridCoord(x, 5) for x in range(2, 11)] + [GridCoord(10, y) for y in range(6, 15)]
    return Trajectory(tuple(points))


class FootprintTest(SimpleTestCase):
    def test_values(self):
        self.assertEqual(footprint(5, 2), 9)
        self.assertEqual(footprint(9, 2), 17)
        self.assertEqual(footprint(1, 4), 1)
        self.assertEqual(footprint(3, 1), 3)
        self.assertEqual(sequence_count(9, 5, 2), 1)
        self.assertEqual(sequence_count(8, 5, 2), 0)

    def test_bad_params(self):
        for t, s in ((4, 2), (0, 1), (3, 0)):
            with self.subTest(t=t, s=s):
                with self.assertRaises(InvalidParams):
                    footprint(t, s)

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(st.integers(0, 20), st.integers(1, 12), st.integers(0, 60))
    def test_covers_at_least_t_pixels(self, m, s, length):
        t = 2 * m + 1
        self.assertGreaterEqual(footprint(t, s), t)
        self.assertEqual(footprint(t, s) == t, s == 1 or t == 1)
        self.assertEqual(sequence_count(length, t, s), max(0, length - footprint(t, s) + 1))


class ExtractTest(SimpleTestCase):
    def setUp(self):
        self.grid = toy_floorplan(30)
        self.walk = l_walk()

    def test_windows_slide_by_one(self):
        sequences = extract_sequences(self.walk, self.grid, t=5, s=2, radius=4)
        self.assertEqual(len(sequences), len(self.walk) - 9 + 1)
        first = sequences[0]
        self.assertEqual(first.frames.shape, (5, 9, 9))
        self.assertEqual(first.center, self.walk[4])
        self.assertEqual(first.origins, tuple(self.walk[i] for i in (0, 2, 4, 6, 8)))
        self.assertEqual(first.heading, heading_at(self.walk, 4))

    def test_frames_are_rotated_isovists(self):
        sequences = extract_sequences(self.walk, self.grid, t=3, s=3, radius=5)
        sequence = sequences[6]
        for step, origin in enumerate(sequence.origins):
            index = 6 + 3 * step
            expected = rotate_isovist(compute_isovist(self.grid, origin, 5), heading_at(self.walk, index))
            npt.assert_array_equal(sequence.frames[step], expected.window)

    def test_too_short(self):
        short = Trajectory(tuple(self.walk.points[:8]))
        with self.assertRaises(TrajectoryTooShort):
            extract_sequences(short, self.grid, t=5, s=2, radius=4)
        with self.assertRaises(TrajectoryTooShort):
            extract_sequences(Trajectory((GridCoord(2, 5),)), self.grid, t=1, s=1, radius=4)

    def test_many_trajectories_skip_short(self):
        short = Trajectory(tuple(self.walk.points[:4]))
        sequences = sequences_for_trajectories([short, self.walk], self.grid, 5, 2, 4)
        self.assertEqual(sequences, extract_sequences(self.walk, self.grid, 5, 2, 4))
        with self.assertRaises(TrajectoryTooShort):
            sequences_for_trajectories([short], self.grid, 5, 2, 4, skip_short=False)

    def test_frames_must_match_spacing_rules(self):
        with self.assertRaises(InvalidParams):
            IsovistSequence(frames=np.zeros((2, 9, 9)), center=(0, 0), spacing=1, heading=0.0)
        with self.assertRaises(InvalidParams):
            IsovistSequence(frames=np.zeros((3, 9, 7)), center=(0, 0), spacing=1, heading=0.0)


class DatasetFileTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.path = os.path.join(self.tmp, 'data.isq')
        self.sequences = extract_sequences(l_walk(), toy_floorplan(30), t=3, s=2, radius=4)

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def read_bytes(self):
        with open(self.path, 'rb') as handle:
            return handle.read()

    def write_bytes(self, data):
        with open(self.path, 'wb') as handle:
            handle.write(data)

    def test_round_trip(self):
        written = write_dataset(self.sequences, self.path)
        loaded = read_dataset(self.path)
        self.assertEqual(loaded, written)
        self.assertEqual(str(loaded), f"Dataset t=3 s=2 W=9 ({len(self.sequences)} sequences)")
        self.assertEqual(loaded.frames().shape, (len(self.sequences), 3, 9, 9))
        self.assertIsNone(loaded.records[0].origins)

    def test_header_layout(self):
        write_dataset(self.sequences, self.path)
        data = self.read_bytes()
        self.assertEqual(data[:4], DATASET_MAGIC)
        self.assertEqual(data[4], 1)
        self.assertEqual(struct.unpack('<IIII', data[5:21]), (3, 2, 9, len(self.sequences)))
        record_size = 16 + 3 * 11
        self.assertEqual(len(data), 21 + record_size * len(self.sequences))

    def test_corrupt_files(self):
        write_dataset(self.sequences, self.path)
        data = self.read_bytes()
        for bad in (b'XXXX' + data[4:], data[:-1], data + b'\0', data[:4] + b'\x07' + data[5:]):
            self.write_bytes(bad)
            with self.assertRaises(FormatError):
                read_dataset(self.path)

    def test_empty_dataset_file(self):
        write_dataset(Dataset(3, 2, 9), self.path)
        self.assertEqual(read_dataset(self.path).count, 0)
        self.assertEqual(read_dataset(self.path).frames().shape, (0, 3, 9, 9))

    def test_mixed_sequences(self):
        other = extract_sequences(l_walk(), toy_floorplan(30), t=3, s=2, radius=5)
        with self.assertRaises(HeaderMismatch):
            dataset_from_sequences(self.sequences + other)
        with self.assertRaises(EmptyInput):
            dataset_from_sequences([])
