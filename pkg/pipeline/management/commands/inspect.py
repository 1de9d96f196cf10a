import logging

from gridworld.grid import GRID_MAGIC, read_grid
from pipeline.base import PipelineCommand
from pipeline.models import TrainingRun
from sequences.dataset import DATASET_MAGIC, read_dataset_header
from utils.binio import open_binary, read_exact
from utils.exceptions import FormatError
from vae_model.checkpoint import CHECKPOINT_MAGIC, read_checkpoint_header

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Print the headers of grid, dataset and checkpoint files, or list recorded training runs'
    config_flags = ()
    needs_seed = False

    def add_command_arguments(self, parser):
        parser.add_argument('paths', nargs='*', help='IGRD, ISQ1 or IVAE files')
        parser.add_argument('--runs', action='store_true', help='List the recorded training runs')

    def run(self, config, **options):
        for path in options['paths']:
            self.stdout.write(f"{path}: {self.describe(path)}")
        if options['runs']:
            self.list_runs()

    def describe(self, path):
        with open_binary(path, 'rb') as handle:
            magic = read_exact(handle, 4, 'magic')
            handle.seek(0)
            if magic == GRID_MAGIC:
                return str(read_grid(handle))
            if magic == DATASET_MAGIC:
                t, s, window, count = read_dataset_header(handle)
                return f"ISQ1 dataset t={t} s={s} W={window}, {count} sequences"
            if magic == CHECKPOINT_MAGIC:
                return f"IVAE checkpoint {read_checkpoint_header(handle)}"
        raise FormatError(f"{path}: unknown file magic {magic!r}")

    def list_runs(self):
        runs = TrainingRun.objects.all()
        if not runs:
            self.stdout.write(self.style.WARNING("No training runs recorded"))
            return
        for run in runs:
            self.stdout.write(f"{run}")
            for record in run.epoch_records.all():
                self.stdout.write(f"    {record}")
