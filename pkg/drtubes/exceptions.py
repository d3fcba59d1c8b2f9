from typing import Optional


class DrTubesError(Exception):
    """Base class for all errors raised by drtubes."""


class InvalidDesignError(DrTubesError, ValueError):
    """The dose design cannot support the requested computation."""


class DegenerateShapeError(DrTubesError, ValueError):
    """A shape (or the response vector) is constant on the design."""


class DomainError(DrTubesError, ValueError):
    """An argument lies outside the domain of a function."""


class EmptyCapError(DomainError):
    """A spherical cap with radius r >= 1 contains no volume."""


class ConfigError(DrTubesError, ValueError):
    """A configuration or data file violates its schema."""

    def __init__(self, msg: str, *, line: Optional[int] = None) -> None:
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class NumericalError(DrTubesError, ArithmeticError):
    """A numerical procedure failed to produce a usable answer."""


class NonBracketingError(NumericalError):
    """A root search could not bracket its target."""


class SampleSizeLimitError(NumericalError):
    """No sample size up to the configured maximum reaches the target power."""
