"""Direction search: minimize d f(x)(w) over a unit ball.

Three structures admit exact solvers. Differentiable points reduce to the
normalized negative gradient; coordinate-separable subderivatives split into
1-D problems on [-1, 1] under the sup-norm ball; concave subderivatives
attain their minimum at an extreme point of the l1 ball. Everything else
goes through a seeded sampling fallback that can refute stationarity but
never certify it.

Tie-breaking is deterministic everywhere: candidates are scanned in a fixed
enumeration order and only a strictly smaller value displaces the incumbent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NoGradient, NotSeparable
from .extreal import ExtReal
from .model import FunctionModel, ScalarPart, Vector, as_vector

_GRID_POINTS = 65
_GOLDEN_TOL = 1e-10
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class NormChoice(enum.Enum):
    L2 = "l2"
    L1 = "l1"
    LINF = "linf"


@dataclass(frozen=True)
class DirectionResult:
    """A unit-ball direction, its subderivative value, and an exactness flag.

    ``value`` always equals f.subderivative(x, w) as recomputed through the
    model. ``exact`` is True only for the closed-form solvers (and, for the
    reduced l1 variant, exact relative to the induced polytope norm).
    ``evaluations`` counts inner oracle/objective evaluations.
    """

    w: Vector
    value: ExtReal
    exact: bool
    evaluations: int


def solve_l2_smooth(f: FunctionModel, x: Vector) -> DirectionResult:
    """Steepest descent over the Euclidean ball at a differentiable point.

    w = -grad f(x) / ||grad f(x)||, or w = 0 at a stationary point.
    """
    x = as_vector(x, f.dim)
    if not f.has_gradient:
        raise NoGradient("solve_l2_smooth needs gradient access")
    g = f.gradient(x)
    nrm = float(np.linalg.norm(g))
    if nrm == 0.0:
        return DirectionResult(np.zeros(f.dim), ExtReal(0.0), True, 1)
    w = -(g / nrm)
    return DirectionResult(w, f.subderivative(x, w), True, 2)


def _solve_piecewise_linear(c: float, part: ScalarPart) -> tuple[float, float, int]:
    """Exact minimum of c*t + g(t) on [-1, 1] for piecewise-linear g.

    Candidates are the endpoints (in the order -1, +1) and then interior
    kinks; a strictly smaller value displaces the incumbent. This ordering
    reproduces the closed-form active-index table for the l1 case, ties
    included.
    """
    cands = [-1.0, 1.0] + [k for k in part.kinks if -1.0 < k < 1.0]
    best_t, best_v, evals = None, np.inf, 0
    for t in cands:
        v = c * t + part.fn(t)
        evals += 1
        if v < best_v:
            best_t, best_v = t, v
    return float(best_t), float(best_v), evals


def _golden_section(h, lo: float, hi: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    hc, hd = h(c), h(d)
    while b - a > _GOLDEN_TOL:
        if hc < hd:
            b, d, hd = d, c, hc
            c = b - _INVPHI * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _INVPHI * (b - a)
            hd = h(d)
    return 0.5 * (a + b)


def _solve_scalar_grid(c: float, part: ScalarPart) -> tuple[float, float, int]:
    """Bracket on a 65-point grid, then golden-section refine to 1e-10."""
    grid = np.linspace(-1.0, 1.0, _GRID_POINTS)

    def h(t: float) -> float:
        return c * t + part.fn(t)

    vals = [h(t) for t in grid]
    i = int(np.argmin(vals))
    lo = grid[max(0, i - 1)]
    hi = grid[min(_GRID_POINTS - 1, i + 1)]
    t_star = _golden_section(h, lo, hi)
    cands = [(grid[i], vals[i]), (t_star, h(t_star))]
    best_t, best_v = min(cands, key=lambda p: p[1])
    return float(best_t), float(best_v), _GRID_POINTS + 2


def solve_linf_separable(parts: Sequence[ScalarPart], grad: Vector, x: Vector,
                         model: Optional[FunctionModel] = None) -> DirectionResult:
    """Coordinatewise direction search over the sup-norm ball.

    Requires the declared structure d f(x)(w) = <grad, w> + sum_i g_i(w_i);
    each coordinate solves min over t in [-1, 1] of grad_i * t + g_i(t).
    Exact when every g_i is piecewise linear; otherwise the scalar problems
    fall back to grid bracketing with golden-section refinement and the
    result is flagged inexact.
    """
    grad = as_vector(grad, name="grad")
    n = grad.shape[0]
    if len(parts) != n:
        raise NotSeparable(f"got {len(parts)} scalar parts for dimension {n}")
    w = np.zeros(n)
    total = 0.0
    evals = 0
    exact = True
    for i, part in enumerate(parts):
        if part.piecewise_linear:
            t, s, e = _solve_piecewise_linear(float(grad[i]), part)
        else:
            t, s, e = _solve_scalar_grid(float(grad[i]), part)
            exact = False
        w[i] = t
        total += s
        evals += e
    if model is not None:
        value = model.subderivative(as_vector(x, n), w)
        evals += 1
    else:
        value = ExtReal(total)
    return DirectionResult(w, value, exact, evals)


def l1_vertices(n: int) -> list[Vector]:
    """Extreme points of the l1 ball in tie-break order e1, -e1, e2, -e2, ..."""
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out.append(e.copy())
        e2 = np.zeros(n)
        e2[i] = -1.0
        out.append(e2)
    return out


def reduced_vertices(n: int) -> list[Vector]:
    """The n+1 point set {e_i} plus the all-minus-ones vector.

    Its convex hull is a polytope with the origin interior, hence the unit
    ball of an induced norm; minimizing a concave subderivative over that
    ball needs only these n+1 evaluations.
    """
    out = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        out.append(e)
    out.append(-np.ones(n))
    return out


def solve_l1_extreme(f: FunctionModel, x: Vector, reduced: bool = False) -> DirectionResult:
    """Vertex enumeration for a concave d f(x)(.) over the l1 ball.

    The caller declares concavity; a concave function attains its minimum
    over the polytope at an extreme point. With ``reduced`` the n+1 point set
    {e_i} union {-e} is used instead; that is exact for the norm whose unit
    ball is the convex hull of those points, and the result's direction may
    exceed the l1 ball (||-e||_1 = n).
    """
    x = as_vector(x, f.dim)
    verts = reduced_vertices(f.dim) if reduced else l1_vertices(f.dim)
    best_w, best_v = None, np.inf
    evals = 0
    for v in verts:
        d = f.subderivative(x, v)
        evals += 1
        if d.v < best_v:
            best_w, best_v = v, d.v
    if best_w is None:  # every vertex was +inf
        best_w = verts[0]
    return DirectionResult(best_w, f.subderivative(x, best_w), True, evals + 1)


def _unit_ball_sample(rng: np.random.Generator, n: int, norm: NormChoice) -> Vector:
    if norm is NormChoice.LINF:
        return rng.uniform(-1.0, 1.0, size=n)
    if norm is NormChoice.L2:
        g = rng.standard_normal(n)
        g /= np.linalg.norm(g)
        return g * rng.uniform() ** (1.0 / n)
    # l1 ball: Dirichlet magnitudes, random signs, radial shrink
    e = rng.exponential(size=n)
    mags = e / np.sum(e)
    signs = rng.choice([-1.0, 1.0], size=n)
    return signs * mags * rng.uniform() ** (1.0 / n)


def norm_of(w: Vector, norm: NormChoice) -> float:
    if norm is NormChoice.L2:
        return float(np.linalg.norm(w))
    if norm is NormChoice.L1:
        return float(np.sum(np.abs(w)))
    return float(np.max(np.abs(w)))


def solve_sampling_fallback(f: FunctionModel, x: Vector, norm: NormChoice,
                            budget: int, seed: int) -> DirectionResult:
    """Best of signed coordinate directions, the normalized negative gradient
    when available, and ``budget`` seeded uniform unit-ball samples.

    Directions with an infinite subderivative are discarded (they are never
    descent directions); if everything is discarded the zero direction is
    returned. Never exact: a fallback result can fail to refute stationarity
    but cannot certify it.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    x = as_vector(x, f.dim)
    rng = np.random.default_rng(seed)
    cands = l1_vertices(f.dim)
    if f.has_gradient:
        g = f.gradient(x)
        nrm = norm_of(g, norm)
        if nrm > 0:
            cands.append(-(g / nrm))
    for _ in range(budget):
        cands.append(_unit_ball_sample(rng, f.dim, norm))
    best_w, best_v = None, np.inf
    evals = 0
    for wv in cands:
        d = f.subderivative(x, wv)
        evals += 1
        if not d.is_finite:
            continue
        if d.v < best_v:
            best_w, best_v = wv, d.v
    if best_w is None:
        return DirectionResult(np.zeros(f.dim), ExtReal(0.0), False, evals)
    return DirectionResult(best_w, f.subderivative(x, best_w), False, evals + 1)
