from pathlib import Path
from dotenv import load_dotenv
import os

load_dotenv()

def get_env(key, default=None):
    """Get environment variable with validation"""
    value = os.environ.get(key, default)
    if value is None:
        raise ValueError(f"Missing required environment variable: {key}")
    return value


def get_int_env(key, default):
    """Get a positive integer setting from the environment"""
    value = int(get_env(key, str(default)))
    if value <= 0:
        raise ValueError(f"Environment variable {key} must be positive, got {value}")
    return value


def get_float_env(key, default):
    """Get a positive float setting from the environment"""
    value = float(get_env(key, str(default)))
    if value <= 0:
        raise ValueError(f"Environment variable {key} must be positive, got {value}")
    return value


BASE_DIR = Path(__file__).resolve().parent.parent

# Only used for Django's internal signing; the project serves no web traffic.
SECRET_KEY = get_env("SECRET_KEY", "toral-dynamics-local-key")

DEBUG = get_env("DYNAMICS_DEBUG", "0") == "1"

ALLOWED_HOSTS = ["localhost", "127.0.0.1"]


INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "dynamics",
]

MIDDLEWARE = [
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
]

# Admin only: browse the fitted-constant cache with `manage.py runserver`
ROOT_URLCONF = "core.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]


DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": get_env("DYNAMICS_DB_PATH", str(BASE_DIR / "dynamics.sqlite3")),
    }
}

CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "dynamics-constants",
    }
}


LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# -----------------------------
# EXPERIMENT CONFIGURATION
# -----------------------------
# Defaults for every budget and tolerance used by the services. Each key can
# be overridden with a DYNAMICS_<KEY> environment variable.
REPORT_DIR = get_env("DYNAMICS_REPORT_DIR", str(BASE_DIR / "reports"))

DYNAMICS_CONFIG = {
    'precision_bits': get_int_env('DYNAMICS_PRECISION_BITS', 128),
    'point_budget': get_int_env('DYNAMICS_POINT_BUDGET', 10**7),
    'quadrature_points': get_int_env('DYNAMICS_QUADRATURE_POINTS', 4096),
    'trials': get_int_env('DYNAMICS_TRIALS', 500),
    'tube_eps': get_float_env('DYNAMICS_TUBE_EPS', 0.02),
    'probe_cap': get_int_env('DYNAMICS_PROBE_CAP', 2**22),
    'partition_cap': get_int_env('DYNAMICS_PARTITION_CAP', 10**6),
    'fourier_cutoff_cap': get_int_env('DYNAMICS_FOURIER_CUTOFF_CAP', 2**27),
    'fit_samples': get_int_env('DYNAMICS_FIT_SAMPLES', 64),
    'constant_sidecar': get_env(
        'DYNAMICS_CONSTANT_SIDECAR', os.path.join(REPORT_DIR, 'constants.json')
    ),
    'report_dir': REPORT_DIR,
}


# -----------------------------
# LOGGING CONFIGURATION
# -----------------------------
# Console logging always; file logging only when a log directory is given,
# so read-only checkouts and CI stay console-only.
LOG_DIR = os.environ.get('DYNAMICS_LOG_DIR')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {asctime} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'INFO',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'dynamics': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
}

if LOG_DIR:
    os.makedirs(LOG_DIR, exist_ok=True)
    LOGGING['handlers']['file_error'] = {
        'level': 'ERROR',
        'class': 'logging.FileHandler',
        'filename': os.path.join(LOG_DIR, 'error.log'),
        'formatter': 'verbose',
    }
    LOGGING['handlers']['file_experiments'] = {
        'level': 'INFO',
        'class': 'logging.FileHandler',
        'filename': os.path.join(LOG_DIR, 'experiments.log'),
        'formatter': 'verbose',
    }
    LOGGING['loggers']['dynamics']['handlers'] = ['console', 'file_experiments', 'file_error']
    LOGGING['loggers']['dynamics.services.density_service'] = {
        'handlers': ['console', 'file_experiments', 'file_error'],
        'level': 'INFO',
        'propagate': False,
    }
