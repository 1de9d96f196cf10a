# ====================================
#  COMMAND PLUMBING  🔧
# ====================================
"""
Shared base for the isoseq management commands.

Commands put their work in ``run(config, **options)``. Any PipelineError is
logged and turned into a CommandError carrying the error's exit code
(2 usage/config, 3 data, 4 I/O).
"""
import logging
import os

from django.core.management.base import BaseCommand, CommandError

from utils.binio import open_binary
from utils.exceptions import IoError, PipelineError
from .config import RunConfig

logger = logging.getLogger(__name__)

# flag dest -> RunConfig field
CONFIG_FLAGS = {
    'sequence_length': ('-t', '--sequence-length', int),
    'spacing': ('-s', '--spacing', int),
    'radius': ('-r', '--radius', int),
    'latent_dim': ('-d', '--latent-dim', int),
    'gru_hidden': (None, '--gru-hidden', int),
    'beta': (None, '--beta', float),
    'epochs': (None, '--epochs', int),
    'batch_size': (None, '--batch-size', int),
    'learning_rate': (None, '--learning-rate', float),
    'trajectory_count': ('-n', '--trajectory-count', int),
    'resize': (None, '--resize', float),
    'seed': (None, '--seed', int),
    'output_dir': ('-o', '--output-dir', str),
}


class PipelineCommand(BaseCommand):
    config_flags = tuple(CONFIG_FLAGS)
    needs_seed = True

    def add_arguments(self, parser):
        parser.add_argument('--config', dest='config_file', help='Run config file ("key = value" lines)')
        for dest in self.config_flags:
            short, long, cast = CONFIG_FLAGS[dest]
            names = [name for name in (short, long) if name]
            parser.add_argument(*names, dest=dest, type=cast, help=f'Override "{dest}" of the run config')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            config = self.load_config(options)
            self.run(config, **options)
        except PipelineError as e:
            logger.error(f"{self.command_name()} failed: {e}")
            raise CommandError(str(e), returncode=e.exit_code) from e

    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]

    def load_config(self, options):
        config = RunConfig.defaults()
        if options.get('config_file'):
            config = RunConfig.from_file(options['config_file'], base=config)
        flags = {dest: options.get(dest) for dest in self.config_flags}
        if options.get('maps'):
            flags['maps'] = options['maps']
        config = config.override(**flags)
        if self.needs_seed:
            config.validate()
        return config

    def run(self, config, **options):
        raise NotImplementedError

    # ------------------------------------
    #  output helpers
    # ------------------------------------
    def output_path(self, config, explicit, default_name):
        path = explicit or os.path.join(config.output_dir, default_name)
        directory = os.path.dirname(path)
        if directory:
            try:
                os.makedirs(directory, exist_ok=True)
            except OSError as e:
                raise IoError(f"Cannot create output directory {directory}: {e}") from e
        return path

    def write_bytes(self, path, data):
        with open_binary(path, 'wb') as handle:
            handle.write(data)

    def banner(self, title):
        self.stdout.write(self.style.SUCCESS("=" * 60))
        self.stdout.write(self.style.SUCCESS(title))
        self.stdout.write(self.style.SUCCESS("=" * 60))
