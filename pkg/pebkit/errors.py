# pebkit/errors.py
"""Exception hierarchy shared by every pebkit module.

The CLI maps each class onto an exit code (see pebkit.app).
"""


class PebkitError(ValueError):
    """Base class for all pebkit errors."""


class InputError(PebkitError):
    """Malformed, non-finite or dimensionally inconsistent input."""


class PreconditionError(PebkitError):
    """An operation was asked to work outside its domain (e.g. Kraus rank above k)."""

    def __init__(self, message: str, rank: int | None = None):
        super().__init__(message)
        self.rank = rank


class VerificationError(PebkitError):
    """A computed result failed its own post-condition."""

    def __init__(self, message: str, max_residual: float):
        super().__init__(message)
        self.max_residual = max_residual
