import logging

from django.conf import settings

from annotate.overlay import read_sidecar
from annotate.strips import latent_range_from_points, render_strip, sample_latent_grid, sample_latent_random
from pipeline.base import PipelineCommand
from vae_model.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Decode equally spaced latent codes of a 1-d model and render them as a strip'
    config_flags = ('seed', 'output_dir')
    needs_seed = False

    def add_command_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='IVAE checkpoint')
        parser.add_argument('-k', '--samples', type=int, default=settings.LATENT_SAMPLES, help='Number of columns')
        parser.add_argument('--low', type=float, default=settings.LATENT_RANGE_LOW, help='First latent value')
        parser.add_argument('--high', type=float, default=settings.LATENT_RANGE_HIGH, help='Last latent value')
        parser.add_argument(
            '--range-from',
            metavar='SIDECAR',
            help='Take low/high from the latents of an annotation sidecar',
        )
        parser.add_argument(
            '--random',
            action='store_true',
            help='Draw codes from the prior instead (any latent dimension, needs --seed)',
        )
        parser.add_argument('--scale', type=int, default=settings.OVERLAY_SCALE, help='Pixels per window cell')
        parser.add_argument('--output', help='Strip PNG (default: <output_dir>/latent_grid.png)')

    def run(self, config, **options):
        model = load_checkpoint(options['checkpoint'])
        k = options['samples']

        self.banner("LATENT SAMPLING")
        self.stdout.write(f"{model}")
        if options['random']:
            config.validate()
            samples = sample_latent_random(model, k, config.seed)
            self.stdout.write(f"{k} codes from the prior (seed={config.seed})")
        else:
            low, high = options['low'], options['high']
            if options.get('range_from'):
                low, high = latent_range_from_points(read_sidecar(options['range_from']))
            samples = sample_latent_grid(model, k, low, high)
            self.stdout.write(f"{k} codes from {low} to {high}")

        output = self.output_path(config, options.get('output'), 'latent_grid.png')
        self.write_bytes(output, render_strip(samples, scale=options['scale']))
        self.stdout.write(f"Strip: {output}")
        self.stdout.write(self.style.SUCCESS("✅ Strip written"))
