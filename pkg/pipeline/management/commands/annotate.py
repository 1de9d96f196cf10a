import logging

from django.conf import settings

from annotate.overlay import annotate_trajectories, render_overlay, write_sidecar
from gridworld.grid import load_map
from pathgen.trajectory import load_trajectory
from pipeline.base import PipelineCommand
from vae_model.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Color hand-drawn trajectories by their latent codes and render the overlay as PNG'
    config_flags = ('spacing', 'resize', 'output_dir')
    needs_seed = False

    def add_command_arguments(self, parser):
        parser.add_argument('trajectories', nargs='+', help='Trajectory text files ("x,y" per line)')
        parser.add_argument('--checkpoint', required=True, help='IVAE checkpoint')
        parser.add_argument('--map', required=True, help='Floor-plan image or IGRD grid file')
        parser.add_argument('--output', help='Overlay PNG (default: <output_dir>/overlay.png)')
        parser.add_argument('--sidecar', help='Annotation listing (default: next to the overlay, .txt)')
        parser.add_argument('--scale', type=int, default=settings.OVERLAY_SCALE, help='Pixels per grid cell')

    def run(self, config, **options):
        model = load_checkpoint(options['checkpoint'])
        grid = load_map(options['map'], scale=config.resize)
        sources = options['trajectories']
        trajectories = [load_trajectory(path) for path in sources]
        t, radius = model.config.t, (model.config.window - 1) // 2

        self.banner("TRAJECTORY ANNOTATION")
        self.stdout.write(f"{model}")
        self.stdout.write(f"Map: {options['map']} ({grid})")
        self.stdout.write(f"t={t} s={config.spacing} R={radius}, {len(trajectories)} trajectories")

        points = annotate_trajectories(model, grid, trajectories, t, config.spacing, radius, sources=sources)
        output = self.output_path(config, options.get('output'), 'overlay.png')
        sidecar = options.get('sidecar') or output.rsplit('.', 1)[0] + '.txt'
        self.write_bytes(output, render_overlay(grid, points, scale=options['scale']))
        write_sidecar(points, sidecar)

        self.stdout.write("-" * 60)
        self.stdout.write(f"Annotated points: {len(points)}")
        self.stdout.write(f"Overlay: {output}")
        self.stdout.write(f"Sidecar: {sidecar}")
        self.stdout.write(self.style.SUCCESS("✅ Annotation written"))
