"""The oracle contract: objective value and subderivative queries.

A FunctionModel answers two questions about an objective f: the value f(x)
as an extended real, and the lower directional derivative

    d f(x)(w) = liminf over t -> 0+, w' -> w of (f(x + t w') - f(x)) / t,

again as an extended real. Both must be pure: identical arguments give
bit-identical answers. Capability flags (semi-differentiability, a descent
constant, a lower bound, gradient access, separable structure) let the
direction-search and line-search layers pick the right specialized path.

All models are immutable values; implementations must be stateless and safe
for any number of concurrent readers.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatch, NoGradient, NotSeparable
from .extreal import ExtReal

Vector = npt.NDArray[np.float64]


def as_vector(x, dim: Optional[int] = None, name: str = "x") -> Vector:
    """Coerce to a 1-D float64 array with finite entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite coordinates")
    return arr


@dataclass(frozen=True)
class ScalarPart:
    """One coordinate g_i of a separable subderivative d g(x)(w) = sum g_i(w_i).

    ``fn`` evaluates g_i on [-1, 1]. When ``piecewise_linear`` is set, the
    1-D direction subproblems are solved exactly by enumerating the interval
    endpoints and the listed ``kinks``; otherwise a grid-plus-golden-section
    refinement is used.
    """

    fn: Callable[[float], float]
    kinks: tuple[float, ...] = field(default=())
    piecewise_linear: bool = False


class FunctionModel(abc.ABC):
    """Contract every objective oracle implements.

    Contracts (documented, not runtime-verified):
      * value and subderivative are pure functions of their arguments.
      * subderivative(x, .) is positively homogeneous of degree 1.
      * querying subderivative at x with value(x) = +inf is a caller error;
        models with ``extended_valued`` set report it as DomainViolation.
      * if ``semi_differentiable`` is set, the directional limit exists as a
        full limit and is finite for all finite x and w.
      * if ``descent_constant`` L is set, then for all x, y in the advertised
        region: f(y) <= f(x) + d f(x)(y - x) + (L/2) ||y - x||^2.
    """

    semi_differentiable: bool = False
    extended_valued: bool = False
    subderivative_concave: bool = False
    has_gradient: bool = False
    is_separable: bool = False
    descent_constant: Optional[float] = None
    lower_bound: Optional[float] = None

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Ambient dimension n."""

    @abc.abstractmethod
    def value(self, x: Vector) -> ExtReal:
        """f(x) as an extended real (never NaN)."""

    @abc.abstractmethod
    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        """d f(x)(w), the lower directional derivative at x along w."""

    def gradient(self, x: Vector) -> Vector:
        """Gradient at x, for models advertising ``has_gradient``."""
        raise NoGradient(f"{type(self).__name__} does not expose a gradient")

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        """Smooth-part gradient and per-coordinate scalar parts at x.

        Only for models advertising ``is_separable``: the subderivative then
        decomposes as d f(x)(w) = <grad, w> + sum_i g_i(w_i).
        """
        raise NotSeparable(f"{type(self).__name__} has no separable structure")


def check_same_dim(models: Sequence[FunctionModel]) -> int:
    dims = {m.dim for m in models}
    if len(dims) != 1:
        raise DimensionMismatch(f"models disagree on dimension: {sorted(dims)}")
    return dims.pop()


def homogeneity_check(m: FunctionModel, x: Vector, w: Vector, t: float,
                      tol: float = 1e-8) -> bool:
    """Test d f(x)(t w) == t * d f(x)(w) for t > 0.

    Returns True when both sides are finite and agree within ``tol``, or when
    both are the same infinity. Mismatches return False rather than raising.
    """
    if t <= 0:
        raise ValueError("homogeneity_check requires t > 0")
    x = as_vector(x, m.dim, "x")
    w = as_vector(w, m.dim, "w")
    lhs = m.subderivative(x, t * w)
    rhs = m.subderivative(x, w).scaled(t)
    if lhs.is_finite and rhs.is_finite:
        return abs(lhs.v - rhs.v) <= tol
    return lhs.v == rhs.v
