"""Exception hierarchy.

Every error raised by the package derives from :class:`EmostockError`. The three
mid-level families map onto CLI exit codes (config 2, data 3, backend 4);
model-level errors are reported as data errors by the CLI.
"""


class EmostockError(Exception):
    exit_code = 1


class ConfigError(EmostockError):
    exit_code = 2


class DataError(EmostockError):
    exit_code = 3


class BackendError(EmostockError):
    exit_code = 4


# ingest
class MissingColumn(DataError):
    pass


class EncodingError(DataError):
    pass


class NonMonotonicDates(DataError):
    pass


class NegativePrice(DataError):
    pass


class InvalidPrice(DataError):
    pass


class EmptyInput(DataError):
    pass


# inference
class NetworkError(BackendError):
    pass


class CacheMiss(BackendError):
    pass


class BadResponse(BackendError):
    pass


# preprocess
class EmptyTweet(DataError):
    pass


class Unparseable(DataError):
    pass


# emotion
class BadScore(DataError):
    pass


class UnknownEmotion(DataError):
    pass


# dataset
class MixedMethods(DataError):
    pass


class TooShort(DataError):
    pass


class CalendarMismatch(DataError):
    pass


class TooFewRows(DataError):
    pass


# lstm
class ModelError(DataError):
    pass


class ShapeMismatch(ModelError):
    pass


class NonFiniteInput(ModelError):
    pass


class StaleCache(ModelError):
    pass


class NonFiniteLoss(ModelError):
    def __init__(self, epoch, loss):
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


# experiment
class LengthMismatch(DataError):
    pass


class EmptyMetrics(DataError):
    pass


class TooFewRuns(DataError):
    pass


class StageError(EmostockError):
    """Wraps a failure inside run_experiment with the stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        # a missing or unreadable input path is a configuration problem
        default = ConfigError.exit_code if isinstance(cause, OSError) else DataError.exit_code
        self.exit_code = getattr(cause, "exit_code", default)
