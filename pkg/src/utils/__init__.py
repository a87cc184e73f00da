"""유틸리티 모듈"""
from .errors import (
    HembError,
    ConfigError,
    DataError,
    FormatError,
    CapacityError,
    ValidationError,
    ShapeError,
    NumericalError,
    InvalidInputError,
    handle_error,
    error_response,
    exit_code_for,
)
from .logging import setup_logging, get_logger, log_command, LogContext
from .metrics import Metrics, get_metrics, count_warning, track_execution
from .validation import as_vector, as_matrix, require_same_length, require_finite, require_fraction

__all__ = [
    # Errors
    'HembError',
    'ConfigError',
    'DataError',
    'FormatError',
    'CapacityError',
    'ValidationError',
    'ShapeError',
    'NumericalError',
    'InvalidInputError',
    'handle_error',
    'error_response',
    'exit_code_for',
    # Logging
    'setup_logging',
    'get_logger',
    'log_command',
    'LogContext',
    # Metrics
    'Metrics',
    'get_metrics',
    'count_warning',
    'track_execution',
    # Validation
    'as_vector',
    'as_matrix',
    'require_same_length',
    'require_finite',
    'require_fraction',
]
