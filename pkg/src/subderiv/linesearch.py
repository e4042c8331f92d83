"""Step-size selection: Armijo backtracking and the diminishing schedule.

The Armijo acceptance test is strict,

    f(x + a w) - f(x) < (a / 2) * d f(x)(w),

with a = alpha_init * mu^m for the smallest m >= 0 that passes. Boundary
equality rejects; the 1-D quadratic fixtures hinge on that. The direction
value d is passed in, not recomputed, so the accepted step is consistent
with the search that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import BacktrackExhausted
from .model import FunctionModel, Vector


@dataclass(frozen=True)
class ArmijoParams:
    """Reduction multiple mu in (0, 1), initial step, and the backtrack cap.

    The default cap of 60 brings the step near 1e-18 at mu = 0.5; beyond
    that, failure is diagnostic (the model is neither semi-differentiable
    nor descent-property at x), not something to retry.
    """

    mu: float = 0.5
    alpha_init: float = 1.0
    max_backtracks: int = 60

    def __post_init__(self):
        if not (0.0 < self.mu < 1.0):
            raise ValueError("mu must lie in (0, 1)")
        if self.alpha_init <= 0:
            raise ValueError("alpha_init must be positive")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")


@dataclass(frozen=True)
class Schedule:
    """Either Armijo backtracking or the diminishing steps a_k = a0 / (k+1).

    The diminishing sequence satisfies sum a_k = inf and sum a_k^2 < inf.
    """

    kind: str
    armijo_params: Optional[ArmijoParams] = field(default=None)
    alpha0: Optional[float] = field(default=None)


def armijo_schedule(params: Optional[ArmijoParams] = None) -> Schedule:
    return Schedule(kind="armijo", armijo_params=params or ArmijoParams())


def diminishing_schedule(alpha0: float = 1.0) -> Schedule:
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    return Schedule(kind="diminishing", alpha0=float(alpha0))


def armijo(f: FunctionModel, x: Vector, w: Vector, d: float,
           params: Optional[ArmijoParams] = None) -> tuple[float, int]:
    """Backtrack from alpha_init until the strict decrease test passes.

    ``d`` is the direction-search value d f(x)(w) and must be negative;
    f(x) must be finite. Returns (alpha, backtracks). Raises
    BacktrackExhausted past the cap.
    """
    p = params or ArmijoParams()
    if not d < 0:
        raise ValueError(f"armijo requires a negative direction value, got {d}")
    fx = f.value(x).v
    if not math.isfinite(fx):
        raise ValueError("armijo requires f(x) finite")
    for m in range(p.max_backtracks + 1):
        alpha = p.alpha_init * p.mu ** m
        trial = f.value(x + alpha * w).v  # +inf trial values simply fail the test
        if trial - fx < 0.5 * alpha * d:
            return alpha, m
    raise BacktrackExhausted(
        f"no acceptable step within {p.max_backtracks} backtracks")


def schedule_step(schedule: Schedule, k: int, f: FunctionModel, x: Vector,
                  w: Vector, d: float) -> tuple[float, int]:
    """Step size for iteration k under the given schedule.

    Diminishing returns alpha0 / (k+1) with zero backtracks; Armijo delegates.
    """
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    if schedule.kind == "diminishing":
        return schedule.alpha0 / (k + 1), 0
    if schedule.kind == "armijo":
        return armijo(f, x, w, d, schedule.armijo_params)
    raise ValueError(f"unknown schedule kind {schedule.kind!r}")
