"""
Django settings for the isoseq project.

isoseq learns unsupervised encodings of isovist sequences along indoor
trajectories. The project has no web surface: everything runs through
management commands (see pipeline/management/commands), and the database
only keeps a ledger of training runs.

Every tunable is read through python-decouple, so values can come from the
environment or a .env file next to manage.py.
"""

from pathlib import Path
from decouple import config
import os
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# No sessions or signing happen in this project; the key only satisfies Django.
SECRET_KEY = config('SECRET_KEY', default='isoseq-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    # isoseq apps
    'gridworld',
    'visibility',
    'pathgen',
    'sequences',
    'neuralnet',
    'vae_model',
    'annotate',
    'pipeline',
]

MIDDLEWARE = []


# Database - run ledger only (see pipeline.models)
DATABASES = {
    'default': dj_database_url.config(
        default=config('DATABASE_URL', default=f'sqlite:///{BASE_DIR / "db.sqlite3"}'),
        conn_max_age=0,
    )
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# ====================================
#  PIPELINE DEFAULTS
# ====================================
# Floor plans
MAP_RESIZE = config('MAP_RESIZE', default=1.0, cast=float)

# Isovists and sequences
ISOVIST_RADIUS = config('ISOVIST_RADIUS', default=16, cast=int)
SEQUENCE_LENGTH = config('SEQUENCE_LENGTH', default=5, cast=int)
SEQUENCE_SPACING = config('SEQUENCE_SPACING', default=2, cast=int)

# Trajectory synthesis
TRAJECTORY_COUNT = config('TRAJECTORY_COUNT', default=1000, cast=int)
MAX_PATH_RETRIES = config('MAX_PATH_RETRIES', default=100, cast=int)

# Network and training
LATENT_DIM = config('LATENT_DIM', default=1, cast=int)
GRU_HIDDEN = config('GRU_HIDDEN', default=250, cast=int)
KL_WEIGHT = config('KL_WEIGHT', default=1.0, cast=float)
EPOCHS = config('EPOCHS', default=100, cast=int)
BATCH_SIZE = config('BATCH_SIZE', default=64, cast=int)
LEARNING_RATE = config('LEARNING_RATE', default=1e-3, cast=float)

# Visualization
LATENT_SAMPLES = config('LATENT_SAMPLES', default=25, cast=int)
LATENT_RANGE_LOW = config('LATENT_RANGE_LOW', default=-3.0, cast=float)
LATENT_RANGE_HIGH = config('LATENT_RANGE_HIGH', default=3.0, cast=float)
OVERLAY_SCALE = config('OVERLAY_SCALE', default=4, cast=int)

OUTPUT_DIR = config('OUTPUT_DIR', default='output')


# Create logs directory if it doesn't exist
LOGS_DIR = os.path.join(BASE_DIR, 'logs')
if not DEBUG and not os.path.exists(LOGS_DIR):
    os.makedirs(LOGS_DIR)

LOG_LEVEL = config('LOG_LEVEL', default='DEBUG' if DEBUG else 'INFO')

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose' if DEBUG else 'simple',
        },
        'file': {
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': os.path.join(LOGS_DIR, 'isoseq.log'),
            'maxBytes': 1024 * 1024 * 10,
            'backupCount': 5,
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'] if DEBUG else ['console', 'file'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}
