"""
Django settings for the fusionlab project.

The project has no web surface; Django provides settings, management commands and the
test runner, and the numerical packages under ``fusionlab`` read their defaults from the
``FUSIONLAB`` dictionary below.
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = config('DJANGO_SECRET_KEY', default='!!!SET_DJANGO_SECRET_KEY!!!')

DEBUG = config('DJANGO_DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    "fusionlab.runs.apps.RunsConfig",
]

INSTALLED_APPS = THIRD_PARTY_APPS + LOCAL_APPS

# Database
# nothing in fusionlab persists; no database is configured.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = config('TIME_ZONE', default='UTC')

USE_I18N = False

USE_TZ = True

from core.configs.celery_configs import *
from core.configs.fusionlab import *
from core.configs.logging import *
