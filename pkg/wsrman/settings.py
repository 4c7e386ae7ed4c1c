"""
Django settings for the wsrman project.

There is no web surface and no database: the project exists to host the
`wsr` app, its management commands and its test runner.
"""

import os
import sys

from pathlib import Path

from django.core.management.utils import get_random_secret_key

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Nothing is signed, so a per-process key is enough unless one is given.
SECRET_KEY = os.environ.get('WSR_SECRET_KEY') or get_random_secret_key()

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
	'wsr',
]

DATABASES = {}


# Logging

LOGGING = {
	'version': 1,
	'disable_existing_loggers': False,
	'formatters': {
		'plain': {
			'format': '{levelname} {name}: {message}',
			'style': '{',
		},
	},
	'handlers': {
		'stderr': {
			'class': 'logging.StreamHandler',
			'stream': sys.stderr,
			'formatter': 'plain',
		},
	},
	'loggers': {
		'wsr': {
			'handlers': ['stderr'],
			'level': os.environ.get('WSR_LOG_LEVEL', 'WARNING'),
			'propagate': False,
		},
	},
}


# Scoring

# Significant digits of scores in CSV output
WSR_DIGITS = 17

# Threads used to score an archive
WSR_WORKERS = int(os.environ.get('WSR_WORKERS', 1))

# Progress bars on stderr; None means "if stderr is a terminal"
WSR_PROGRESS = None
