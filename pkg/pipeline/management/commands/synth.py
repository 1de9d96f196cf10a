import hashlib
import logging
import os

import numpy as np

from gridworld.grid import load_map
from pathgen.sampling import sample_random_trajectories
from pathgen.trajectory import save_trajectory
from pipeline.base import PipelineCommand
from sequences.dataset import dataset_from_sequences, write_dataset
from sequences.extract import footprint, sequences_for_trajectories
from utils.binio import open_binary
from utils.exceptions import IoError

logger = logging.getLogger(__name__)


def map_seed(seed, index):
    """Independent trajectory seed for the index-th map of a run"""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


class Command(PipelineCommand):
    help = 'Sample shortest-path trajectories on floor plans and write an ISQ1 isovist-sequence dataset'

    def add_command_arguments(self, parser):
        parser.add_argument('--maps', nargs='+', help='Floor-plan images or IGRD grid files')
        parser.add_argument('--output', help='Dataset path (default: <output_dir>/dataset.isq)')
        parser.add_argument(
            '--save-trajectories',
            metavar='DIR',
            help='Also write every sampled trajectory as an "x,y" text file',
        )

    def run(self, config, **options):
        config.validate(require_maps=True)
        footprint(config.sequence_length, config.spacing)
        output = self.output_path(config, options.get('output'), 'dataset.isq')
        trajectory_dir = options.get('save_trajectories')

        self.banner("ISOVIST SEQUENCE SYNTHESIS")
        self.stdout.write(f"Maps: {', '.join(config.maps)}")
        self.stdout.write(f"t={config.sequence_length} s={config.spacing} R={config.radius} "
                          f"trajectories/map={config.trajectory_count} seed={config.seed}")
        self.stdout.write("-" * 60)

        sequences = []
        for index, path in enumerate(config.maps):
            grid = load_map(path, scale=config.resize)
            trajectories = sample_random_trajectories(grid, config.trajectory_count, map_seed(config.seed, index))
            extracted = sequences_for_trajectories(
                trajectories, grid, config.sequence_length, config.spacing, config.radius
            )
            sequences.extend(extracted)
            self.stdout.write(f"🗺️  {path}: {grid}, {len(trajectories)} trajectories, {len(extracted)} sequences")
            logger.info(f"{path}: {len(extracted)} sequences from {len(trajectories)} trajectories")
            if trajectory_dir:
                self._save_trajectories(trajectory_dir, index, trajectories)

        dataset = write_dataset(dataset_from_sequences(sequences), output)
        with open_binary(output, 'rb') as handle:
            checksum = hashlib.sha256(handle.read()).hexdigest()

        self.stdout.write("\n" + "=" * 60)
        self.stdout.write(self.style.SUCCESS("SUMMARY"))
        self.stdout.write("=" * 60)
        self.stdout.write(f"Sequences written: {dataset.count}")
        self.stdout.write(f"Window size: {dataset.window}")
        self.stdout.write(f"Dataset: {output}")
        self.stdout.write(f"SHA-256: {checksum}")
        self.stdout.write(self.style.SUCCESS("✅ Dataset written"))

    def _save_trajectories(self, directory, map_index, trajectories):
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as e:
            raise IoError(f"Cannot create {directory}: {e}") from e
        for i, traj in enumerate(trajectories):
            save_trajectory(traj, os.path.join(directory, f"map{map_index}_{i:05d}.txt"))
