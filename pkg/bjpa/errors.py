"""
Error types and per-point error details for the amplifier simulator
"""
import traceback
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional


class ErrorSeverity(Enum):
    """Severity levels for errors"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error categories"""
    CONFIGURATION = "configuration"
    CIRCUIT = "circuit"
    STEADY_STATE = "steady_state"
    GAIN = "gain"
    METRIC = "metric"
    OPTIMIZATION = "optimization"
    OUTPUT = "output"


class BJPAError(Exception):
    """Base class for all simulator errors"""

    category: ErrorCategory = ErrorCategory.CIRCUIT
    severity: ErrorSeverity = ErrorSeverity.MEDIUM
    exit_code: int = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}


class ConfigurationError(BJPAError):
    """Invalid design, configuration file or matrix setup"""
    category = ErrorCategory.CONFIGURATION
    severity = ErrorSeverity.HIGH
    exit_code = 2


class SingularInductanceError(BJPAError):
    """Flux bias at or beyond |phi| = pi/2"""
    category = ErrorCategory.CIRCUIT
    severity = ErrorSeverity.HIGH


class NearSingularError(BJPAError):
    """Scattering matrix determinant below threshold (parametric oscillation)"""
    category = ErrorCategory.GAIN


class OperatingPointError(BJPAError):
    """Operating point is unstable or gives no finite gain"""
    category = ErrorCategory.STEADY_STATE


class UndefinedBandwidthError(BJPAError):
    """Peak gain too small for a -3 dB bandwidth"""
    category = ErrorCategory.METRIC
    severity = ErrorSeverity.LOW


class CoverageGapError(BJPAError):
    """Design cannot be flux-tuned across the requested band"""
    category = ErrorCategory.METRIC


class UnreachableGainError(BJPAError):
    """No stable pump setting reaches the gain target"""
    category = ErrorCategory.METRIC


class OutputError(BJPAError):
    """An artifact could not be written"""
    category = ErrorCategory.OUTPUT


@dataclass
class ErrorDetail:
    """Details of one failed evaluation, embedded in sweep output"""
    category: ErrorCategory
    severity: ErrorSeverity
    message: str
    exception_type: str
    context: Dict[str, Any] = field(default_factory=dict)
    stack_trace: Optional[str] = None

    @classmethod
    def from_exception(cls, exc: BaseException, context: Optional[Dict[str, Any]] = None) -> "ErrorDetail":
        if isinstance(exc, BJPAError):
            category, severity = exc.category, exc.severity
            merged = {**exc.context, **(context or {})}
        else:
            category, severity = ErrorCategory.METRIC, ErrorSeverity.HIGH
            merged = dict(context or {})
        return cls(
            category=category,
            severity=severity,
            message=str(exc),
            exception_type=type(exc).__name__,
            context=merged,
            stack_trace="".join(traceback.format_exception(type(exc), exc, exc.__traceback__)),
        )

    @property
    def marker(self) -> str:
        """Short marker written into CSV cells in place of a value"""
        return f"error:{self.exception_type}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "category": self.category.value,
            "severity": self.severity.value,
            "message": self.message,
            "exception_type": self.exception_type,
            "context": self.context,
        }
