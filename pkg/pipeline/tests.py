import math
import os
import shutil
import tempfile
from io import BytesIO, StringIO
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from PIL import Image

from gridworld.grid import GridCoord, save_grid
from pathgen.trajectory import Trajectory, save_trajectory
from sequences.dataset import read_dataset
from utils.exceptions import InvalidParams, IoError
from utils.testing import toy_floorplan
from vae_model.checkpoint import load_checkpoint, save_checkpoint
from vae_model.network import VaeConfig, VaeModel
from .config import RunConfig
from .management.commands.synth import map_seed
from .models import EpochRecord, TrainingRun

SMALL_RUN = dict(sequence_length=3, spacing=2, radius=4, trajectory_count=6, seed=11)


class PipelineTestMixin:
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.map_path = self.path('toy.igrd')
        save_grid(toy_floorplan(30), self.map_path)

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def call(self, name, *args, **options):
        out = StringIO()
        call_command(name, *args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def assertExitCode(self, code, name, *args, **options):
        with self.assertRaises(CommandError) as ctx:
            self.call(name, *args, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def read(self, path):
        with open(path, 'rb') as handle:
            return handle.read()

    def synth(self, name='dataset.isq', **overrides):
        options = {**SMALL_RUN, **overrides}
        self.call('synth', maps=[self.map_path], output=self.path(name), **options)
        return self.path(name)


class RunConfigTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_file_round_trip(self):
        config = RunConfig.defaults().override(maps=['a.png', 'b.igrd'], seed=42, beta=0.5, radius=8)
        path = os.path.join(self.tmp, 'run.cfg')
        config.save(path)
        self.assertEqual(RunConfig.from_file(path), config)

    def test_flags_win_over_file(self):
        path = os.path.join(self.tmp, 'run.cfg')
        with open(path, 'w') as handle:
            handle.write("# comment\nspacing = 3\nseed = 5\n")
        config = RunConfig.from_file(path).override(spacing=4, radius=None)
        self.assertEqual((config.spacing, config.seed), (4, 5))
        self.assertEqual(config.radius, RunConfig.defaults().radius)
        self.assertEqual(config.window, 2 * config.radius + 1)

    def test_environment_does_not_shadow_file(self):
        path = os.path.join(self.tmp, 'run.cfg')
        with open(path, 'w') as handle:
            handle.write("spacing = 3\nseed = 5\n")
        with mock.patch.dict(os.environ, {'spacing': '7', 'seed': '99', 'radius': '3'}):
            config = RunConfig.from_file(path)
        self.assertEqual((config.spacing, config.seed), (3, 5))
        self.assertEqual(config.radius, RunConfig.defaults().radius)

    def test_bad_values(self):
        path = os.path.join(self.tmp, 'run.cfg')
        with open(path, 'w') as handle:
            handle.write("epochs = many\n")
        with self.assertRaises(InvalidParams):
            RunConfig.from_file(path)
        with self.assertRaises(IoError):
            RunConfig.from_file(os.path.join(self.tmp, 'missing.cfg'))

    def test_validation(self):
        base = RunConfig.defaults().override(seed=1)
        base.validate()
        for bad in (dict(sequence_length=4), dict(spacing=0), dict(radius=1), dict(seed=None),
                    dict(beta=-1.0), dict(learning_rate=0.0)):
            with self.subTest(**bad):
                with self.assertRaises(InvalidParams):
                    RunConfig(**{**vars(base), **bad}).validate()
        with self.assertRaises(InvalidParams):
            base.validate(require_maps=True)

    def test_map_seeds_differ(self):
        self.assertNotEqual(map_seed(7, 0), map_seed(7, 1))
        self.assertEqual(map_seed(7, 1), map_seed(7, 1))


class SynthCommandTest(PipelineTestMixin, TestCase):
    def test_deterministic_dataset(self):
        first = self.synth('first.isq')
        second = self.synth('second.isq')
        self.assertEqual(self.read(first), self.read(second))
        dataset = read_dataset(first)
        self.assertEqual((dataset.t, dataset.s, dataset.window), (3, 2, 9))
        self.assertGreater(dataset.count, 0)

    def test_seed_changes_dataset(self):
        self.assertNotEqual(self.read(self.synth('a.isq')), self.read(self.synth('b.isq', seed=12)))

    def test_floor_plan_image_input(self):
        grid = toy_floorplan(30)
        png = self.path('toy.png')
        Image.fromarray((grid.cells * 255).astype(np.uint8)).save(png)
        out = self.call('synth', maps=[png], output=self.path('png.isq'), **SMALL_RUN)
        self.assertIn('SHA-256', out)
        self.assertGreater(read_dataset(self.path('png.isq')).count, 0)

    def test_trajectories_saved(self):
        directory = self.path('trajectories')
        self.call('synth', maps=[self.map_path], output=self.path('d.isq'), save_trajectories=directory, **SMALL_RUN)
        self.assertEqual(len(os.listdir(directory)), SMALL_RUN['trajectory_count'])

    def test_config_file_flag(self):
        config_path = self.path('run.cfg')
        RunConfig.defaults().override(maps=[self.map_path], **SMALL_RUN).save(config_path)
        output = self.path('from_config.isq')
        call_command('synth', '--config', config_path, '--output', output, stdout=StringIO())
        self.assertEqual(self.read(output), self.read(self.synth()))
        self.call('synth', config=config_path, spacing=1, output=self.path('flag.isq'))
        self.assertEqual(read_dataset(self.path('flag.isq')).s, 1)

    def test_usage_errors(self):
        self.assertExitCode(2, 'synth', maps=[self.map_path], **{**SMALL_RUN, 'sequence_length': 4})
        self.assertExitCode(2, 'synth', maps=[self.map_path], **{**SMALL_RUN, 'seed': None})
        self.assertExitCode(2, 'synth', **SMALL_RUN)

    def test_missing_map(self):
        self.assertExitCode(4, 'synth', maps=[self.path('nowhere.png')], **SMALL_RUN)


class TrainCommandTest(PipelineTestMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.dataset = self.synth()

    def train(self, tag, **overrides):
        options = {**SMALL_RUN, 'gru_hidden': 8, 'epochs': 2, 'batch_size': 16, **overrides}
        self.call('train', self.dataset, checkpoint=self.path(f'{tag}.ivae'),
                  loss_log=self.path(f'{tag}.txt'), **options)
        return self.path(f'{tag}.ivae'), self.path(f'{tag}.txt')

    def test_deterministic_training(self):
        first_ckpt, first_log = self.train('first')
        second_ckpt, second_log = self.train('second')
        self.assertEqual(self.read(first_log), self.read(second_log))
        self.assertEqual(self.read(first_ckpt), self.read(second_ckpt))

    def test_loss_log_and_ledger(self):
        checkpoint, log = self.train('run', epochs=1)
        lines = self.read(log).decode('ascii').splitlines()
        self.assertEqual(lines[0], '# epoch loss bce kl')
        self.assertEqual(len(lines), 2)
        self.assertTrue(math.isfinite(float(lines[1].split()[1])))
        self.assertEqual(load_checkpoint(checkpoint).config.t, 3)

        run = TrainingRun.objects.get()
        self.assertEqual(run.epoch_records.count(), 1)
        self.assertAlmostEqual(run.final_loss, float(lines[1].split()[1]))

    def test_zero_epochs_writes_initial_model(self):
        checkpoint, log = self.train('zero', epochs=0)
        self.assertEqual(self.read(log).decode('ascii'), '# epoch loss bce kl\n')
        self.assertTrue(os.path.exists(checkpoint))
        self.assertIsNone(TrainingRun.objects.get().final_loss)
        self.assertFalse(EpochRecord.objects.exists())

    def test_failed_run_leaves_no_ledger_row(self):
        error = self.assertExitCode(4, 'train', self.dataset, checkpoint=self.tmp, loss_log=self.path('l.txt'),
                                    **{**SMALL_RUN, 'gru_hidden': 4, 'epochs': 1})
        self.assertIn(self.tmp, str(error))
        self.assertFalse(TrainingRun.objects.exists())
        self.assertFalse(EpochRecord.objects.exists())

    def test_header_mismatch(self):
        self.assertExitCode(3, 'train', self.dataset, **{**SMALL_RUN, 'spacing': 3, 'epochs': 1})
        self.assertExitCode(3, 'train', self.dataset, **{**SMALL_RUN, 'radius': 5, 'epochs': 1})

    def test_not_a_dataset(self):
        self.assertExitCode(3, 'train', self.map_path, **{**SMALL_RUN, 'epochs': 1})


class ModelOutputCommandTest(PipelineTestMixin, TestCase):
    def setUp(self):
        super().setUp()
        self.checkpoint = self.path('model.ivae')
        save_checkpoint(VaeModel.initialize(VaeConfig(t=3, window=9, gru_hidden=4), seed=3), self.checkpoint)
        self.walk = self.path('walk.txt')
        save_trajectory(Trajectory(tuple(GridCoord(x, 5) for x in range(2, 9))), self.walk)

    def test_annotate_writes_overlay_and_sidecar(self):
        output = self.path('overlay.png')
        self.call('annotate', self.walk, checkpoint=self.checkpoint, map=self.map_path,
                  output=output, scale=2, spacing=2)
        image = Image.open(BytesIO(self.read(output)))
        self.assertEqual(image.size, (32 * 2, 32 * 2))
        lines = self.read(self.path('overlay.txt')).decode('ascii').splitlines()
        self.assertEqual(len(lines), 7 - 4)
        self.assertTrue(lines[0].startswith('4,5,'))
        self.assertRegex(lines[0], r'#[0-9A-F]{8}$')

    def test_annotate_short_trajectory_names_file(self):
        short = self.path('short.txt')
        save_trajectory(Trajectory((GridCoord(2, 5), GridCoord(3, 5), GridCoord(4, 5))), short)
        error = self.assertExitCode(3, 'annotate', short, checkpoint=self.checkpoint, map=self.map_path, spacing=2)
        self.assertIn('short.txt', str(error))

    def test_latent_grid(self):
        output = self.path('strip.png')
        self.call('latent_grid', checkpoint=self.checkpoint, samples=25, scale=1, output=output)
        image = Image.open(BytesIO(self.read(output)))
        self.assertEqual(image.size, (25 * 9, 3 * 9 + 4))

    def test_latent_grid_range_from_sidecar(self):
        self.call('annotate', self.walk, checkpoint=self.checkpoint, map=self.map_path,
                  output=self.path('overlay.png'), spacing=2)
        out = self.call('latent_grid', checkpoint=self.checkpoint, samples=5, scale=1,
                        range_from=self.path('overlay.txt'), output=self.path('strip.png'))
        self.assertIn('5 codes from', out)
        self.assertEqual(Image.open(self.path('strip.png')).size, (5 * 9, 3 * 9 + 4))

    def test_latent_grid_rejects_bad_requests(self):
        self.assertExitCode(2, 'latent_grid', checkpoint=self.checkpoint, samples=1)
        model_2d = VaeModel.initialize(VaeConfig(t=3, window=9, latent_dim=2, gru_hidden=4), seed=3)
        save_checkpoint(model_2d, self.path('d2.ivae'))
        self.assertExitCode(2, 'latent_grid', checkpoint=self.path('d2.ivae'), samples=5)
        self.call('latent_grid', checkpoint=self.path('d2.ivae'), samples=5, random=True, seed=1,
                  output=self.path('random.png'))
        self.assertTrue(os.path.exists(self.path('random.png')))

    def test_reconstruct(self):
        dataset = self.synth()
        output = self.path('reconstruction.png')
        self.call('reconstruct', dataset, checkpoint=self.checkpoint, count=2, scale=1, output=output)
        image = Image.open(BytesIO(self.read(output)))
        self.assertEqual(image.size, (4 * 9, 3 * 9))

    def test_inspect(self):
        dataset = self.synth()
        out = self.call('inspect', self.map_path, dataset, self.checkpoint)
        self.assertIn('OccupancyGrid 32x32', out)
        self.assertIn('ISQ1 dataset t=3 s=2 W=9', out)
        self.assertIn('IVAE checkpoint VaeConfig t=3 W=9', out)
        self.assertExitCode(3, 'inspect', self.walk)
        self.assertExitCode(4, 'inspect', self.path('missing.bin'))

    def test_inspect_runs(self):
        self.assertIn('No training runs recorded', self.call('inspect', runs=True))
        run = TrainingRun.objects.create(
            seed=1, sequence_length=3, spacing=2, window=9, latent_dim=1, beta=1.0, epochs=1,
            batch_size=4, learning_rate=1e-3, dataset_path='d.isq', checkpoint_path='m.ivae', final_loss=0.5,
        )
        EpochRecord.objects.create(run=run, epoch=1, loss=0.5, bce=0.4, kl=10.0)
        out = self.call('inspect', runs=True)
        self.assertIn(f'Run {run.pk}', out)
        self.assertIn('epoch 1: 0.500000', out)
