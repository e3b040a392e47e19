import os

DEBUG = False

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = os.getenv('SECRET_KEY', 'sekrit')

# Default analysis config (window grid, VAD thresholds, optional features)
WORKLOAD_CONFIG = os.getenv('WORKLOAD_CONFIG',
                            os.path.join(BASE_DIR, 'config', 'default.json'))

# Number of worker processes used to fan out completed windows.
# 0 processes windows inline, in the reader's process.
STREAM_WORKERS = int(os.getenv('STREAM_WORKERS', '0'))
# Windows in flight before the reader blocks (back-pressure)
STREAM_MAX_PENDING = int(os.getenv('STREAM_MAX_PENDING', '4'))
# Chunk duration used by the streaming reader
STREAM_CHUNK_MS = int(os.getenv('STREAM_CHUNK_MS', '500'))

# Clamp network output to the 0-4 label scale for downstream consumers
CLAMP_ESTIMATES = bool(int(os.getenv('CLAMP_ESTIMATES', '0')))

# Worker processes used to evaluate cross-validation folds
EVAL_WORKERS = int(os.getenv('EVAL_WORKERS', '0'))

DATABASES = {}

INSTALLED_APPS = [
    'estimator.apps.EstimatorConfig',
]

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'estimator': {
            'handlers': ['console'],
            'level': os.getenv('WORKLOAD_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_TZ = True

# Override production variables if DJANGO_DEVELOPMENT env variable is set
if os.getenv('DJANGO_DEVELOPMENT'):
    from .settings_dev import *
