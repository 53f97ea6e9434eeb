"""
Django settings for the sarges gesture-labeling toolkit.

The toolkit has no web surface and no database; Django supplies settings,
logging and the management-command framework that the operator CLI is built
on.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.0/ref/settings/
"""

import os
from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables
env = environ.Env(
    DEBUG=(bool, False),
    SARGES_BACKEND=(str, "scripted"),
    SARGES_REFLECT=(int, 0),
    SARGES_MAX_PER_SENTENCE=(int, 2),
    SARGES_PARALLEL=(int, 4),
    SARGES_TIMEOUT=(float, 60.0),
    SARGES_TEMPERATURE=(float, 0.0),
)

# Read .env file if it exists
environ.Env.read_env(os.path.join(BASE_DIR, ".env"))

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("SECRET_KEY", default="django-insecure-sarges-gesture-labeling-toolkit")

DEBUG = env("DEBUG")

ALLOWED_HOSTS: list[str] = []

# Application definition

INSTALLED_APPS = [
    "gestures",
]

# No database: every artifact lives in plain files.
DATABASES: dict[str, dict[str, str]] = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True

# Gesture labeling

SARGES_ETHOGRAM_PATH = Path(
    env("SARGES_ETHOGRAM_PATH", default=str(BASE_DIR / "gestures" / "fixtures" / "ethogram.json"))
)

# Backend: "remote" talks to a chat-completion endpoint, "scripted" replays transcripts.
SARGES_BACKEND = env("SARGES_BACKEND")
SARGES_ENDPOINT = env("SARGES_ENDPOINT", default="https://api.openai.com/v1/chat/completions")
SARGES_API_KEY = env("SARGES_API_KEY", default="")
SARGES_MODEL = env("SARGES_MODEL", default="gpt-4")
SARGES_TRANSCRIPTS_DIR = env("SARGES_TRANSCRIPTS_DIR", default=str(BASE_DIR / "transcripts"))

# Per-token prices as exact fractions, e.g. "3/100000" for 0.03 per 1K tokens.
SARGES_PRICE_IN = env("SARGES_PRICE_IN", default="0")
SARGES_PRICE_OUT = env("SARGES_PRICE_OUT", default="0")
SARGES_CURRENCY = env("SARGES_CURRENCY", default="USD")

# Intent chain. Reflection stays off unless asked for.
SARGES_REFLECT = env("SARGES_REFLECT")
SARGES_MAX_PER_SENTENCE = env("SARGES_MAX_PER_SENTENCE")
SARGES_PARALLEL = env("SARGES_PARALLEL")
SARGES_TIMEOUT = env("SARGES_TIMEOUT")
SARGES_TEMPERATURE = env("SARGES_TEMPERATURE")

SARGES_PROFILE_NAME = env("SARGES_PROFILE_NAME", default="Ava")
SARGES_PROFILE_PERSONA = env(
    "SARGES_PROFILE_PERSONA",
    default="A friendly and expressive virtual host who greets guests and keeps conversations lively.",
)
SARGES_PROFILE_STYLE = env("SARGES_PROFILE_STYLE", default="warm, upbeat and conversational")

# Pins provenance timestamps so rebuilt dataset files are byte-identical.
SOURCE_DATE_EPOCH = env.int("SOURCE_DATE_EPOCH", default=None)

# Logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {thread:d} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose" if DEBUG else "simple",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        "gestures": {
            "handlers": ["console"],
            "level": env("SARGES_LOG_LEVEL", default="INFO"),
            "propagate": False,
        },
        "django": {
            "handlers": ["console"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}
