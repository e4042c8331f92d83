"""Exception types shared across the toolkit.

Every contract violation raises a subclass of ToolkitError so callers can
distinguish toolkit failures from programming errors.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class IndeterminateSum(ToolkitError):
    """Raised on the undefined extended sum (+inf) + (-inf)."""


class DomainViolation(ToolkitError):
    """An oracle was queried at a point outside its effective domain."""


class DimensionMismatch(ToolkitError):
    """Vector or map dimensions do not chain."""


class NonpositiveScale(ToolkitError):
    """A scaling factor that must be positive was not."""


class EmptyList(ToolkitError):
    """A combinator needing at least one member got none."""


class EmptyProjection(ToolkitError):
    """A set model returned no nearest point."""


class ProxUnavailable(ToolkitError):
    """No closed-form proximal map is bundled for the requested inner function."""


class NoGradient(ToolkitError):
    """Gradient access requested from a model that does not expose one."""


class NotSeparable(ToolkitError):
    """Coordinate-separable structure requested from a model lacking it."""


class BacktrackExhausted(ToolkitError):
    """Armijo backtracking hit its iteration cap without acceptance."""


class InsufficientTrace(ToolkitError):
    """A trace audit was asked about more iterations than were recorded."""


class DimensionTooLarge(ToolkitError):
    """A brute-force enumeration was requested above its cost guard."""


class NotFeasible(ToolkitError):
    """A feasibility-dependent query was made at an infeasible point."""
