"""Emotion-augmented stock movement classification from tweets and daily prices."""

from .errors import BackendError, ConfigError, DataError, EmostockError

__version__ = "0.1.0"

__all__ = ["BackendError", "ConfigError", "DataError", "EmostockError", "__version__"]
