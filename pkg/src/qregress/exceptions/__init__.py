"""Пользовательские исключения и обработка ошибок CLI."""

from qregress.exceptions.handlers import (
    EXIT_OK,
    EXIT_RUNTIME_FAILURE,
    EXIT_USAGE,
    BoundsError,
    CheckpointFormatError,
    ConfigError,
    DataError,
    DatasetSizeError,
    DomainError,
    ExperimentStageError,
    FitError,
    IdxFormatError,
    MissingFitError,
    NotATPEStateError,
    NumericalError,
    QRegressError,
    ShapeError,
    TrainingAbortedError,
    UnsupportedModeError,
    exit_code_for,
    report_error,
)

__all__ = [
    "EXIT_OK",
    "EXIT_RUNTIME_FAILURE",
    "EXIT_USAGE",
    "BoundsError",
    "CheckpointFormatError",
    "ConfigError",
    "DataError",
    "DatasetSizeError",
    "DomainError",
    "ExperimentStageError",
    "FitError",
    "IdxFormatError",
    "MissingFitError",
    "NotATPEStateError",
    "NumericalError",
    "QRegressError",
    "ShapeError",
    "TrainingAbortedError",
    "UnsupportedModeError",
    "exit_code_for",
    "report_error",
]
