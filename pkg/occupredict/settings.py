"""
Django settings for the occupredict project.

The project has no database and no HTTP surface; Django provides the settings
layer, the logging configuration, the management commands and the test runner.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables
load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'occupredict-insecure-change-in-production')
DEBUG = os.getenv('DJANGO_DEBUG', 'False').lower() == 'true'
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'apps.common',
    'apps.grid',
    'apps.neural',
    'apps.baseline',
    'apps.trajectories',
    'apps.pipeline',
]

DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Redis configuration
REDIS_URL = os.getenv('REDIS_URL', 'redis://localhost:6379/0')

# Celery configuration
CELERY_BROKER_URL = REDIS_URL
CELERY_RESULT_BACKEND = REDIS_URL
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 60 * 60  # 1 hour per horizon
CELERY_WORKER_PREFETCH_MULTIPLIER = 1
# For development: run tasks eagerly in the same process
CELERY_TASK_ALWAYS_EAGER = DEBUG
CELERY_TASK_EAGER_PROPAGATES = True

# Logging configuration
LOG_LEVEL = os.getenv('OCCUPREDICT_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'celery': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

# Predictor defaults. CLI flags override these per invocation; environment
# variables never do.
PREDICTOR = {
    'GEOMETRY': {
        'm_x': 36,
        'm_y': 21,
        'cell_length': 5.0,
        'cell_width': 0.875,
        'x_min': 0.0,
    },
    'SAMPLE_PERIOD': 0.1,
    'RAW_SAMPLE_PERIOD': 0.01,
    'WINDOW': 20,
    'SPLIT_RATIO': 0.85,
    'HORIZONS': [0.5, 1.0, 2.0],
    # network
    'INPUT_FC': [64],
    'LSTM_HIDDEN': [128, 128],
    'OUTPUT_FC': [256],
    'FORGET_BIAS': 1.0,
    # training
    'LEARNING_RATE': 0.001,
    'BATCH_SIZE': 40,
    'LAMBDA': 0.0005,
    'LR_DECAY': 0.5,
    'PATIENCE': 3,
    'MIN_LEARNING_RATE': 1e-6,
    'MAX_EPOCHS': 30,
    'MOMENTUM': 0.0,
    'CLIP_NORM': None,
    'LOSS_FORM': 'bce',
    # Kalman baseline
    'KF_Q_ACCEL': [0.5, 0.3],
    'KF_R_POS': 0.3,
    'KF_INITIAL_VELOCITY_STD': 1.0,
    # synthetic scenarios
    'SCENARIO_MIX': {
        'cruise': 0.50,
        'lane_change': 0.30,
        'cut_in': 0.15,
        'decelerating_lead': 0.05,
    },
    'SCENARIO_DURATION': 8.0,
    'POSITION_NOISE': 0.15,
    'VELOCITY_NOISE': 0.1,
    'LATERAL_JITTER': 0.05,
    'LANE_WIDTH': 3.5,
    'TOP_K': 5,
}
