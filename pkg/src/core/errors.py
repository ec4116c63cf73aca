"""
Exception hierarchy shared by the core modules
"""

from typing import Any, Dict, Optional


class ParetoModelError(Exception):
    """Root of all toolkit errors"""


class DimensionError(ParetoModelError, ValueError):
    """Vector lengths or indices do not fit together"""


class DomainError(ParetoModelError, ValueError):
    """Argument outside the domain of an operation (box, empty set, bad count)"""


class ConditioningError(ParetoModelError):
    """Kernel matrix could not be factorized even after jitter escalation"""

    def __init__(self, message: str, condition_estimate: float = float("nan")):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


class DegenerateDirectionError(ParetoModelError):
    """Vertical weight recovery has a zero denominator"""


class FMatrixError(ParetoModelError):
    """A leading sub-matrix of F is singular"""


class AcquisitionError(ParetoModelError):
    """No branch of the rectified NBI cascade produced a usable PF point"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LevelDegenerateError(ParetoModelError):
    """No cascade-feasible query candidate could be drawn for a level"""


class ModelInconsistencyError(ParetoModelError):
    """Generation intervals stayed empty after the retry budget"""


class ModelFileError(ParetoModelError):
    """Model file is corrupt, truncated or written by another format version"""


class ConfigError(ParetoModelError):
    """Run configuration cannot be parsed or validated"""


class TrainingError(ParetoModelError):
    """Training aborted; carries whatever was learned so far"""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial
