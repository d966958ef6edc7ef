"""
Exception hierarchy shared by all services
"""
from typing import Iterable, Optional


def _restore(cls, args, state):
    error = cls.__new__(cls, *args)
    error.args = args
    error.__dict__.update(state)
    return error


class SicmagError(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, message: str, stage: Optional[str] = None, context: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage
        self.context = context

    def __reduce__(self):
        # subclasses take extra constructor arguments; rebuild from state when
        # an error crosses a worker process boundary
        return _restore, (self.__class__, self.args, self.__dict__)

    def __str__(self) -> str:
        parts = []
        if self.stage:
            parts.append(f"[{self.stage}]")
        if self.context:
            parts.append(f"{self.context}:")
        parts.append(self.message)
        return " ".join(parts)


class InvalidInputError(SicmagError, ValueError):
    """Arguments violate an operation's preconditions"""


class EvaluationError(SicmagError):
    """A residual or model evaluation produced non-finite values"""

    def __init__(self, message: str, parameter_index: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.parameter_index = parameter_index


class ModelRangeError(SicmagError):
    """A model was evaluated outside its physical range"""


class DegenerateRegimeError(SicmagError):
    """Spin eigenstates cannot be labelled unambiguously"""


class InitializationError(SicmagError):
    """Initial parameter guesses could not be derived from the data"""


class FitDivergenceError(SicmagError):
    """A fit left the region where its parameters describe the data"""


class DomainError(SicmagError):
    """A field point lies where the formula does not apply"""


class NoTransitionError(SicmagError):
    """A series shows no magnetic transition"""


class NoPeakError(SicmagError):
    """A series has no bracketed maximum"""


class ConfigurationError(SicmagError):
    """The experiment configuration failed validation"""

    def __init__(self, message: str, errors: Optional[Iterable[str]] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.errors = list(errors or [])

    def __str__(self) -> str:
        if not self.errors:
            return super().__str__()
        return super().__str__() + "\n" + "\n".join(f"  {e}" for e in self.errors)


class ParseError(SicmagError):
    """A data file could not be parsed"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None, **kwargs):
        location = path or "<input>"
        if line is not None:
            location = f"{location}:{line}"
        super().__init__(message, context=location, **kwargs)
        self.path = path
        self.line = line


class PairingError(SicmagError):
    """Probe and reference measurements could not be matched"""

    def __init__(self, message: str, orphans: Optional[Iterable[str]] = None, **kwargs):
        self.orphans = sorted(orphans or [])
        if self.orphans:
            message = f"{message}; orphans: {', '.join(self.orphans)}"
        super().__init__(message, **kwargs)


class StageError(SicmagError):
    """A pipeline stage failed; wraps the underlying error"""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(str(cause), stage=stage)
        self.cause = cause
