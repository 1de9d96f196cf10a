# ====================================
#  RUN CONFIGURATION  ⚙️
# ====================================
"""
Run configuration files.

A run config is line-oriented ``key = value`` text with ``#`` comments,
read with python-decouple's RepositoryEnv and its Csv cast. Environment
variables do not leak into it; they only reach the settings defaults.
Values resolve as: command-line flags > config file > Django settings.
"""
from dataclasses import asdict, dataclass, fields, replace
import logging
import math

from decouple import Csv, RepositoryEnv
from django.conf import settings

from utils.binio import open_binary
from utils.exceptions import InvalidParams, IoError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    maps: tuple = ()
    sequence_length: int = 5
    spacing: int = 2
    radius: int = 16
    latent_dim: int = 1
    gru_hidden: int = 250
    beta: float = 1.0
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    trajectory_count: int = 1000
    resize: float = 1.0
    seed: int = None
    output_dir: str = 'output'

    @property
    def window(self):
        return 2 * self.radius + 1

    @classmethod
    def defaults(cls):
        """Field values taken from Django settings"""
        return cls(
            sequence_length=settings.SEQUENCE_LENGTH,
            spacing=settings.SEQUENCE_SPACING,
            radius=settings.ISOVIST_RADIUS,
            latent_dim=settings.LATENT_DIM,
            gru_hidden=settings.GRU_HIDDEN,
            beta=settings.KL_WEIGHT,
            epochs=settings.EPOCHS,
            batch_size=settings.BATCH_SIZE,
            learning_rate=settings.LEARNING_RATE,
            trajectory_count=settings.TRAJECTORY_COUNT,
            resize=settings.MAP_RESIZE,
            output_dir=settings.OUTPUT_DIR,
        )

    @classmethod
    def from_file(cls, path, base=None):
        """
        Values from a config file, falling back to ``base`` (settings defaults).
        Keys are read from the file only; environment variables never shadow them.
        """
        base = base or cls.defaults()
        try:
            repository = RepositoryEnv(path)
        except OSError as e:
            raise IoError(f"Cannot read run config {path}: {e}") from e

        def lookup(key, default, cast):
            return cast(repository[key]) if key in repository else default

        values = {}
        for f in fields(cls):
            current = getattr(base, f.name)
            try:
                if f.name == 'maps':
                    values['maps'] = tuple(lookup('maps', current, Csv()))
                elif f.name == 'seed':
                    values['seed'] = lookup('seed', current, lambda raw: int(raw) if raw.strip() else None)
                else:
                    values[f.name] = lookup(f.name, current, type(current))
            except ValueError as e:
                raise InvalidParams(f"{path}: bad value for '{f.name}': {e}") from e

        config = cls(**values)
        logger.info(f"Loaded run config from {path}")
        return config

    def override(self, **flags):
        """Copy with every flag that is not None applied"""
        changes = {name: value for name, value in flags.items() if value is not None}
        if 'maps' in changes:
            changes['maps'] = tuple(changes['maps'])
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise InvalidParams(f"Unknown run config keys: {sorted(unknown)}")
        return replace(self, **changes)

    def validate(self, require_maps=False):
        checks = [
            (self.sequence_length >= 1 and self.sequence_length % 2 == 1,
             f"sequence_length must be odd and >= 1, got {self.sequence_length}"),
            (self.spacing >= 1, f"spacing must be >= 1, got {self.spacing}"),
            (self.radius >= 2, f"radius must be >= 2, got {self.radius}"),
            (self.latent_dim >= 1, f"latent_dim must be >= 1, got {self.latent_dim}"),
            (self.gru_hidden >= 1, f"gru_hidden must be >= 1, got {self.gru_hidden}"),
            (self.beta >= 0 and math.isfinite(self.beta), f"beta must be finite and >= 0, got {self.beta}"),
            (self.epochs >= 0, f"epochs must be >= 0, got {self.epochs}"),
            (self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}"),
            (self.learning_rate > 0, f"learning_rate must be positive, got {self.learning_rate}"),
            (self.trajectory_count >= 1, f"trajectory_count must be >= 1, got {self.trajectory_count}"),
            (self.resize > 0, f"resize must be positive, got {self.resize}"),
            (self.seed is not None, "seed is mandatory"),
            (not require_maps or bool(self.maps), "at least one map is required"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidParams(message)
        return self

    def to_text(self):
        lines = ['# isoseq run config']
        for name, value in asdict(self).items():
            if name == 'maps':
                value = ','.join(value)
            elif name == 'seed' and value is None:
                value = ''
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{name} = {value}")
        return '\n'.join(lines) + '\n'

    def save(self, path):
        with open_binary(path, 'wb') as handle:
            handle.write(self.to_text().encode('utf-8'))
