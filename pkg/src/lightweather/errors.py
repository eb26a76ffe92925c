"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code / error category (see cli.py).
"""


class LightWeatherError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LightWeatherError):
    """Invalid configuration value, file, or combination."""


class ShapeError(LightWeatherError):
    """Tensor dimensions inconsistent with the declared contract."""


class ValidationError(LightWeatherError):
    """Out-of-range or non-finite runtime input."""


class IngestionError(LightWeatherError):
    """CSV ingestion failure (bad header, bad value, bad grid)."""


class CheckpointError(LightWeatherError):
    """Checkpoint file unreadable or inconsistent with the model config."""


class OptimizerError(LightWeatherError):
    """Optimizer step aborted (e.g. non-finite gradient)."""


class TrainingError(LightWeatherError):
    """Training loop aborted with a diagnostic."""


class EvaluationError(LightWeatherError):
    """Evaluation could not run (e.g. empty split)."""
