import functools
import json
import logging
import logging.handlers
import os
import sys
import traceback
import uuid
from datetime import datetime
from typing import Any, Callable, Dict, Optional, Union


class ErrorSeverity:
    """
    Defines error severity levels with increasing criticality.
    """
    DEBUG = 10
    INFO = 20
    WARNING = 30
    ERROR = 40
    CRITICAL = 50


class SimulationError(Exception):
    """
    Base exception for every failure raised by the solver, with context.

    ``fatal_monitor`` marks failures that the run driver reports with
    exit code 1 (a health monitor tripped) rather than as a usage error.
    """
    fatal_monitor = True

    def __init__(
        self,
        message: str,
        severity: int = ErrorSeverity.ERROR,
        context: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize a SimulationError with detailed information.

        :param message: Error message
        :param severity: Error severity level
        :param context: Additional context (node index, value, threshold, ...)
        """
        super().__init__(message)
        self.id = str(uuid.uuid4())
        self.timestamp = datetime.now().isoformat()
        self.severity = severity
        self.context = context or {}
        self.traceback = traceback.format_exc()

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert error to a dictionary for logging or serialization.

        :return: Dictionary representation of the error
        """
        return {
            'id': self.id,
            'type': type(self).__name__,
            'message': str(self),
            'timestamp': self.timestamp,
            'severity': self.severity,
            'context': _jsonable(self.context),
            'traceback': self.traceback
        }


class DegenerateFrame(SimulationError):
    """Frame or reconstructed metric is (nearly) singular."""


class NonpositiveTheta0(SimulationError):
    """Time component of the normalized velocity fell below its floor."""


class TaylorViolation(SimulationError):
    """Boundary gradient of the enthalpy fails the Taylor sign bound."""


class DegenerateProjection(SimulationError):
    """Boundary projections of the frame legs do not span the tangent space."""


class SpacelikeVelocity(SimulationError):
    """Initial velocity potential does not produce a timelike velocity."""


class DegenerateMetric(SimulationError):
    """Metric data with a vanishing or wrongly signed time coefficient."""


class StencilOutOfDomain(SimulationError):
    """A derivative stencil would need nodes outside its region."""
    fatal_monitor = False


class HyperbolicityLoss(SimulationError):
    """Spectral floor of the curvature time matrix dropped below its minimum."""


class CFLViolation(SimulationError):
    """Requested step exceeds the stability limit."""


class NonfiniteState(SimulationError):
    """A NaN or infinity appeared in the evolved state."""


class NoConvergence(SimulationError):
    """Picard sweeps failed to contract."""


class NumericalFailure(SimulationError):
    """Unexpected exception raised inside the numerics, wrapped with its traceback."""


class DegenerateTimeCoefficient(SimulationError):
    """Coefficient of the second time derivative is too close to zero."""


class OrderUnavailable(SimulationError):
    """Requested energy order exceeds the configured time-derivative stack."""
    fatal_monitor = False


class ContainerFormatError(SimulationError):
    """Binary container or text table is malformed."""
    fatal_monitor = False


def _jsonable(value: Any) -> Any:
    """Best-effort conversion of numpy scalars and arrays for JSON output."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'tolist'):
        return value.tolist()
    return value


class ErrorHandler:
    """
    Centralized error handling and logging for solver runs.
    """
    def __init__(
        self,
        log_dir: str = 'logs',
        log_level: int = logging.INFO,
        max_log_files: int = 10,
        max_log_size_mb: int = 10,
        console: bool = True
    ):
        """
        Initialize the ErrorHandler with logging configuration.

        :param log_dir: Directory to store log files
        :param log_level: Logging level
        :param max_log_files: Maximum number of log files to keep
        :param max_log_size_mb: Maximum size of each log file in MB
        :param console: Also echo records to stdout
        """
        self._log_dir = os.path.abspath(log_dir)
        self._max_log_files = max_log_files
        self._max_log_size_mb = max_log_size_mb

        os.makedirs(self._log_dir, exist_ok=True)

        self._logger = logging.getLogger()
        self._logger.setLevel(log_level)

        class JsonFormatter(logging.Formatter):
            def format(self, record):
                log_record = {
                    'timestamp': datetime.now().isoformat(),
                    'level': record.levelname,
                    'message': record.getMessage(),
                    'logger': record.name,
                    'module': record.module,
                    'function': record.funcName,
                    'line': record.lineno
                }
                if hasattr(record, 'error_id'):
                    log_record['error_id'] = record.error_id
                    log_record['error_context'] = _jsonable(getattr(record, 'error_context', {}))
                if getattr(record, 'error_traceback', None):
                    log_record['traceback'] = record.error_traceback
                elif record.exc_info:
                    log_record['traceback'] = self.formatException(record.exc_info)
                return json.dumps(log_record)

        self._handlers = []
        file_handler = logging.handlers.RotatingFileHandler(
            filename=os.path.join(self._log_dir, 'hardphase.log'),
            maxBytes=self._max_log_size_mb * 1024 * 1024,
            backupCount=self._max_log_files
        )
        file_handler.setFormatter(JsonFormatter())
        self._logger.addHandler(file_handler)
        self._handlers.append(file_handler)

        if console:
            console_handler = logging.StreamHandler(sys.stdout)
            console_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
            self._logger.addHandler(console_handler)
            self._handlers.append(console_handler)

    def log(
        self,
        message: str,
        level: int = logging.INFO,
        extra: Optional[Dict[str, Any]] = None
    ):
        """
        Log a message with optional extra context.

        :param message: Log message
        :param level: Logging level
        :param extra: Additional context for the log
        """
        self._logger.log(level, message, extra=extra or {})

    def handle_error(
        self,
        error: Union[Exception, SimulationError],
        context: Optional[Dict[str, Any]] = None,
        fatal: bool = False
    ) -> SimulationError:
        """
        Handle and log an error, converting it to a SimulationError.

        :param error: Exception to handle
        :param context: Additional context about the error
        :param fatal: Wrap a foreign exception as a fatal
            :class:`NumericalFailure` instead of a usage-level error
        :return: Processed SimulationError
        """
        if isinstance(error, SimulationError):
            sim_error = error
            if context:
                sim_error.context.update(context)
        else:
            wrapper = NumericalFailure if fatal else SimulationError
            sim_error = wrapper(
                message=f"{type(error).__name__}: {error}" if fatal else str(error),
                severity=ErrorSeverity.CRITICAL if fatal else ErrorSeverity.ERROR,
                context=context
            )
            sim_error.fatal_monitor = fatal
            sim_error.context.setdefault('original_type', type(error).__name__)

        trace = ''
        if error.__traceback__ is not None:
            trace = ''.join(traceback.format_exception(type(error), error, error.__traceback__))
            sim_error.traceback = trace

        self.log(
            f"{type(sim_error).__name__}: {sim_error}",
            level=logging.CRITICAL if isinstance(sim_error, NumericalFailure) else logging.ERROR,
            extra={
                'error_id': sim_error.id,
                'error_context': sim_error.context,
                'error_traceback': trace,
            }
        )
        return sim_error

    def create_error_boundary(
        self,
        default_return: Any = None,
        log_errors: bool = True
    ) -> Callable:
        """
        Create an error boundary decorator to handle exceptions gracefully.

        :param default_return: Value to return if an error occurs
        :param log_errors: Whether to log errors
        :return: Decorator function
        """
        def decorator(func):
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                try:
                    return func(*args, **kwargs)
                except Exception as e:
                    if log_errors:
                        self.handle_error(e, context={'function': func.__name__})
                    return default_return
            return wrapper
        return decorator

    def close(self):
        """Detach and close the handlers installed by this instance."""
        for handler in self._handlers:
            self._logger.removeHandler(handler)
            handler.close()
        self._handlers = []
