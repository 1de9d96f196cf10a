import logging

from django.conf import settings

from annotate.strips import render_comparison
from pipeline.base import PipelineCommand
from sequences.dataset import read_dataset
from utils.exceptions import EmptyInput, HeaderMismatch, InvalidParams
from vae_model.checkpoint import load_checkpoint
from vae_model.network import reconstruct

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Render the first sequences of a dataset beside their reconstructions'
    config_flags = ('output_dir',)
    needs_seed = False

    def add_command_arguments(self, parser):
        parser.add_argument('dataset', help='ISQ1 dataset')
        parser.add_argument('--checkpoint', required=True, help='IVAE checkpoint')
        parser.add_argument('-k', '--count', type=int, default=8, help='Number of sequences to compare')
        parser.add_argument('--scale', type=int, default=settings.OVERLAY_SCALE, help='Pixels per window cell')
        parser.add_argument('--output', help='Comparison PNG (default: <output_dir>/reconstruction.png)')

    def run(self, config, **options):
        if options['count'] < 1:
            raise InvalidParams(f"Need at least one sequence, got {options['count']}")
        model = load_checkpoint(options['checkpoint'])
        dataset = read_dataset(options['dataset'])
        if (dataset.t, dataset.window) != (model.config.t, model.config.window):
            raise HeaderMismatch(
                f"Dataset has t={dataset.t} W={dataset.window}, "
                f"checkpoint expects t={model.config.t} W={model.config.window}"
            )
        sequences = dataset.records[:options['count']]
        if not sequences:
            raise EmptyInput(f"{options['dataset']} holds no sequences")
        outputs = reconstruct(model, sequences)

        output = self.output_path(config, options.get('output'), 'reconstruction.png')
        self.write_bytes(output, render_comparison(sequences, list(outputs), scale=options['scale']))
        self.stdout.write(f"Compared {len(sequences)} sequences: {output}")
        self.stdout.write(self.style.SUCCESS("✅ Comparison written"))
