import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('seed', models.BigIntegerField()),
                ('sequence_length', models.PositiveIntegerField()),
                ('spacing', models.PositiveIntegerField()),
                ('window', models.PositiveIntegerField()),
                ('latent_dim', models.PositiveIntegerField()),
                ('beta', models.FloatField()),
                ('epochs', models.PositiveIntegerField()),
                ('batch_size', models.PositiveIntegerField()),
                ('learning_rate', models.FloatField()),
                ('dataset_path', models.CharField(max_length=500)),
                ('checkpoint_path', models.CharField(max_length=500)),
                ('final_loss', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Training run',
                'verbose_name_plural': 'Training runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='EpochRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('epoch', models.PositiveIntegerField()),
                ('loss', models.FloatField()),
                ('bce', models.FloatField()),
                ('kl', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='epoch_records', to='pipeline.trainingrun')),
            ],
            options={
                'ordering': ['run', 'epoch'],
                'unique_together': {('run', 'epoch')},
            },
        ),
    ]
