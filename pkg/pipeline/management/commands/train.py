import logging

from django.db import transaction

from neuralnet.optim import AdamHyper
from pipeline.base import PipelineCommand
from pipeline.models import EpochRecord, TrainingRun
from sequences.dataset import read_dataset
from utils.exceptions import HeaderMismatch
from vae_model.checkpoint import save_checkpoint
from vae_model.network import VaeConfig, VaeModel
from vae_model.training import train

logger = logging.getLogger(__name__)


class Command(PipelineCommand):
    help = 'Train the isovist-sequence VAE on an ISQ1 dataset; writes an IVAE checkpoint and a loss log'

    def add_command_arguments(self, parser):
        parser.add_argument('dataset', help='ISQ1 dataset written by "synth"')
        parser.add_argument('--checkpoint', help='Checkpoint path (default: <output_dir>/model.ivae)')
        parser.add_argument('--loss-log', help='Loss log path (default: <output_dir>/losses.txt)')

    def run(self, config, **options):
        dataset = read_dataset(options['dataset'])
        if dataset.t != config.sequence_length or dataset.s != config.spacing or dataset.window != config.window:
            raise HeaderMismatch(
                f"{options['dataset']} holds t={dataset.t} s={dataset.s} W={dataset.window}, "
                f"the run config asks for t={config.sequence_length} s={config.spacing} W={config.window}"
            )
        checkpoint = self.output_path(config, options.get('checkpoint'), 'model.ivae')
        loss_log = self.output_path(config, options.get('loss_log'), 'losses.txt')

        vae_config = VaeConfig(
            t=config.sequence_length, window=config.window, latent_dim=config.latent_dim,
            gru_hidden=config.gru_hidden, beta=config.beta,
        )
        model = VaeModel.initialize(vae_config, config.seed)

        self.banner("VAE TRAINING")
        self.stdout.write(f"{dataset}")
        self.stdout.write(f"{model}")
        self.stdout.write(f"epochs={config.epochs} batch={config.batch_size} lr={config.learning_rate} seed={config.seed}")
        self.stdout.write("-" * 60)

        def record(stats):
            EpochRecord.objects.create(run=run, epoch=stats.epoch, loss=stats.loss, bce=stats.bce, kl=stats.kl)
            self.stdout.write(f"Epoch {stats.epoch:4d}  loss {stats.loss:.6f}  bce {stats.bce:.6f}  kl {stats.kl:.6f}")

        # a failed run leaves no ledger row behind
        with transaction.atomic():
            run = TrainingRun.objects.create(
                seed=config.seed,
                sequence_length=config.sequence_length,
                spacing=config.spacing,
                window=config.window,
                latent_dim=config.latent_dim,
                beta=config.beta,
                epochs=config.epochs,
                batch_size=config.batch_size,
                learning_rate=config.learning_rate,
                dataset_path=str(options['dataset']),
                checkpoint_path=str(checkpoint),
            )
            trace = train(
                model, dataset, config.epochs, config.batch_size, config.seed,
                hyper=AdamHyper(lr=config.learning_rate), checkpoint_path=checkpoint, on_epoch=record,
            )
            if not trace.epochs:
                save_checkpoint(model, checkpoint)
            run.final_loss = trace.losses[-1] if trace.epochs else None
            run.save(update_fields=['final_loss'])
            self.write_bytes(loss_log, trace.to_text().encode('ascii'))

        self.stdout.write("\n" + "=" * 60)
        self.stdout.write(self.style.SUCCESS("SUMMARY"))
        self.stdout.write("=" * 60)
        self.stdout.write(f"Run: {run}")
        self.stdout.write(f"Checkpoint: {checkpoint}")
        self.stdout.write(f"Loss log: {loss_log}")
        self.stdout.write(self.style.SUCCESS("✅ Training finished"))
