from django.db import models


class TrainingRun(models.Model):
    """One `train` invocation; a ledger only, no output file depends on it"""

    seed = models.BigIntegerField()
    sequence_length = models.PositiveIntegerField()
    spacing = models.PositiveIntegerField()
    window = models.PositiveIntegerField()
    latent_dim = models.PositiveIntegerField()
    beta = models.FloatField()
    epochs = models.PositiveIntegerField()
    batch_size = models.PositiveIntegerField()
    learning_rate = models.FloatField()

    dataset_path = models.CharField(max_length=500)
    checkpoint_path = models.CharField(max_length=500)
    final_loss = models.FloatField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']
        verbose_name = 'Training run'
        verbose_name_plural = 'Training runs'

    def __str__(self):
        loss = 'unfinished' if self.final_loss is None else f'loss {self.final_loss:.6f}'
        return f"Run {self.pk}: t={self.sequence_length} W={self.window} d={self.latent_dim} seed={self.seed} ({loss})"


class EpochRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name='epoch_records')
    epoch = models.PositiveIntegerField()
    loss = models.FloatField()
    bce = models.FloatField()
    kl = models.FloatField()

    class Meta:
        ordering = ['run', 'epoch']
        unique_together = ['run', 'epoch']

    def __str__(self):
        return f"Run {self.run_id} epoch {self.epoch}: {self.loss:.6f}"
