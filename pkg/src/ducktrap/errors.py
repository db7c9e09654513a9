"""Exception types shared across the package."""

from __future__ import annotations


class DucktrapError(Exception):
    """Base class for all package errors."""


class DomainError(DucktrapError, ValueError):
    """A point or parameter lies outside the domain of an operation."""


class PreconditionError(DucktrapError, ValueError):
    """Inputs violate a documented precondition."""


class NoRootInWindow(DucktrapError):
    pass


class RootLost(DucktrapError):
    pass


class UnboundedInteriorTerm(DucktrapError):
    pass


class StepSizeUnderflow(DucktrapError):
    pass


class NonFinite(DucktrapError):
    pass


class SectionNotReached(DucktrapError):
    pass


class BracketFailure(DucktrapError):
    pass


class NoCycle(DucktrapError):
    pass


class Unclassifiable(DucktrapError):
    pass
