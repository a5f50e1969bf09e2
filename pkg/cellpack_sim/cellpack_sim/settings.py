import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('CELLPACK_SECRET_KEY', 'cellpack-sim-local-only')
DEBUG = False
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'rest_framework',
    'cellpack',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

USE_TZ = True
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}

CELLPACK = {
    'LP_METHOD': os.environ.get('CELLPACK_LP_METHOD', 'highs'),
    'OUTPUT_DIR': os.environ.get('CELLPACK_OUTPUT_DIR', 'results'),
    'AGING_PARAMS': BASE_DIR / 'cellpack' / 'fixtures' / 'aging_params.json',
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'cellpack': {
            'handlers': ['console'],
            'level': os.environ.get('CELLPACK_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
