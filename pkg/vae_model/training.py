# ====================================
#  TRAINING  🏋️
# ====================================
from dataclasses import dataclass, field
import logging

import numpy as np

from neuralnet.optim import AdamHyper, AdamState, adam_step
from utils.exceptions import EmptyInput, HeaderMismatch, InvalidParams
from .checkpoint import save_checkpoint
from .network import elbo_loss

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    bce: float
    kl: float

    def to_line(self):
        return f"{self.epoch} {self.loss:.17g} {self.bce:.17g} {self.kl:.17g}"


@dataclass
class TrainingTrace:
    epochs: list = field(default_factory=list)

    @property
    def losses(self):
        return [stats.loss for stats in self.epochs]

    def __len__(self):
        return len(self.epochs)

    def to_text(self):
        """Plain-text loss log: one 'epoch loss bce kl' line per epoch"""
        lines = ['# epoch loss bce kl'] + [stats.to_line() for stats in self.epochs]
        return '\n'.join(lines) + '\n'


def epoch_rng(seed, epoch):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(epoch)]))


def train(model, dataset, epochs, batch_size, seed, hyper=None, checkpoint_path=None, on_epoch=None):
    """
    Train ``model`` in place with Adam on the ELBO.

    Each epoch shuffles with a generator derived from (seed, epoch), which
    also draws the reparameterization noise, so a run is fully determined
    by its seed. ``on_epoch(stats)`` is called after every epoch; with
    ``checkpoint_path`` the model is saved there after every epoch too.
    """
    config = model.config
    if (dataset.t, dataset.window) != (config.t, config.window):
        raise HeaderMismatch(
            f"Dataset has t={dataset.t} W={dataset.window}, model expects t={config.t} W={config.window}"
        )
    if epochs < 0 or batch_size < 1:
        raise InvalidParams(f"Need epochs >= 0 and batch size >= 1, got {epochs} / {batch_size}")
    trace = TrainingTrace()
    if epochs == 0:
        return trace
    if dataset.count == 0:
        raise EmptyInput("Cannot train on an empty dataset")

    frames = dataset.frames().astype(np.float64)
    hyper = hyper or AdamHyper()
    state = AdamState.for_params(model.params)
    logger.info(f"Training {model} on {dataset.count} sequences for {epochs} epochs (batch {batch_size}, seed {seed})")

    for epoch in range(1, epochs + 1):
        rng = epoch_rng(seed, epoch)
        order = rng.permutation(dataset.count)
        totals = np.zeros(3)
        for start in range(0, dataset.count, batch_size):
            indices = order[start:start + batch_size]
            noise = rng.standard_normal((len(indices), config.latent_dim))
            terms, grads = elbo_loss(model, frames[indices], noise)
            model.params, state = adam_step(model.params, grads, state, hyper)
            totals += len(indices) * np.array([terms.loss, terms.bce, terms.kl])

        loss, bce, kl = totals / dataset.count
        stats = EpochStats(epoch=epoch, loss=float(loss), bce=float(bce), kl=float(kl))
        trace.epochs.append(stats)
        logger.info(f"Epoch {epoch}/{epochs}: loss {loss:.6f} (bce {bce:.6f}, kl {kl:.6f})")

        if checkpoint_path is not None:
            save_checkpoint(model, checkpoint_path)
        if on_epoch is not None:
            on_epoch(stats)

    return trace
