"""Exception types shared by all modules."""

from __future__ import annotations


class LagSurgeryError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(LagSurgeryError, ValueError):
    """Inputs live in incompatible dimensions."""


class ParameterError(LagSurgeryError, ValueError):
    """A parameter violates a documented precondition."""


class ModelViolation(LagSurgeryError, RuntimeError):
    """A numerical check contradicts the model it is supposed to confirm."""


class RefinementNeeded(LagSurgeryError, RuntimeError):
    """A discretization is too coarse for the requested computation."""


class NotRepresentable(LagSurgeryError, ValueError):
    """A symbolic operation has no representation in the descriptor vocabulary."""
