"""errors.py - Exception types shared by the reduction laboratory.

The CLI maps these onto its exit codes: ValidationError -> 2,
AcceptanceError -> 3.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"


class ValidationError(ValueError):
    """Raised when an input, parameter set or config file is invalid."""


class ConservationError(RuntimeError):
    """Raised when a solver loses or creates probability mass."""


class AcceptanceError(RuntimeError):
    """Raised when a self-check measurement falls outside its bound."""
