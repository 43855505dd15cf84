"""
Custom exceptions for the torus trace library and its commands
"""
import logging
import math

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_CONVERGENCE = 3


class TorusTraceError(Exception):
    """Base exception for torus trace errors"""
    def __init__(self, message, code=None, details=None):
        self.message = message
        self.code = code or 'TORUS_TRACE_ERROR'
        self.details = details or {}
        super().__init__(self.message)


class DomainError(TorusTraceError):
    """Raised when an argument lies outside an operation's domain"""
    def __init__(self, message, field=None, details=None):
        self.field = field
        super().__init__(message, 'DOMAIN_ERROR', details)


class PreconditionError(TorusTraceError):
    """Raised when inputs are individually valid but inconsistent"""
    def __init__(self, message, details=None):
        super().__init__(message, 'PRECONDITION_ERROR', details)


class ConvergenceError(TorusTraceError):
    """Raised when a series, solver or simulation fails to converge"""
    def __init__(self, message, details=None):
        super().__init__(message, 'CONVERGENCE_ERROR', details)


class ResourceLimitError(TorusTraceError):
    """Raised when a computation would exceed a configured size limit"""
    def __init__(self, message, limit=None, requested=None):
        self.limit = limit
        self.requested = requested
        super().__init__(message, 'RESOURCE_LIMIT', {'limit': limit, 'requested': requested})


class ConfigurationError(TorusTraceError):
    """Raised when a configuration value or file is invalid"""
    def __init__(self, message, details=None):
        super().__init__(message, 'CONFIGURATION_ERROR', details)


def exit_code_for(exc, command=None):
    """
    Map an exception to the process exit code used by the management commands
    """
    if isinstance(exc, ConfigurationError):
        exit_code = EXIT_USAGE
    elif isinstance(exc, (DomainError, PreconditionError)):
        exit_code = EXIT_DOMAIN
    elif isinstance(exc, (ConvergenceError, ResourceLimitError)):
        exit_code = EXIT_CONVERGENCE
    else:
        exit_code = EXIT_USAGE

    if isinstance(exc, TorusTraceError):
        logger.error(f"Torus trace error: {exc.code} - {exc.message}", extra={
            'exception_type': type(exc).__name__,
            'details': exc.details,
            'command': command,
            'exit_code': exit_code,
        })
    return exit_code


def validate_positive(value, field):
    """Validate a finite, strictly positive real"""
    if not math.isfinite(value) or value <= 0:
        raise DomainError(
            f"{field} must be a finite positive number, got {value}",
            field=field,
            details={'received': value}
        )
    return float(value)


def validate_modulus(tau_re, tau_im):
    """Validate a torus modulus tau = tau_re + i*tau_im"""
    if not (math.isfinite(tau_re) and math.isfinite(tau_im)):
        raise DomainError(
            "Modulus components must be finite",
            field='tau',
            details={'tau_re': tau_re, 'tau_im': tau_im}
        )
    if tau_im <= 0:
        raise DomainError(
            f"Modulus must lie in the upper half-plane, got Im(tau) = {tau_im}",
            field='tau_im',
            details={'tau_re': tau_re, 'tau_im': tau_im}
        )
    return complex(tau_re, tau_im)


def validate_unit_interval(value, field):
    """Validate 0 < value < 1"""
    if not (0.0 < value < 1.0):
        raise DomainError(
            f"{field} must lie strictly between 0 and 1, got {value}",
            field=field,
            details={'received': value, 'allowed': '(0, 1)'}
        )
    return float(value)
