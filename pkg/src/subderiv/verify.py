"""Independent oracles: finite differences, brute-force search, and samplers.

Nothing here shares code with the closed-form paths it checks. The
finite-difference harness discretizes the defining lower limit directly;
the brute-force direction search enumerates a dense grid of the unit sphere;
the samplers instantiate the descent-property and sufficient-decrease
inequalities literally.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calculus import SemiDiffMap
from .direction import DirectionResult, NormChoice, norm_of
from .errors import DimensionTooLarge, DomainViolation, NotFeasible
from .extreal import ExtReal, POS_INF
from .model import FunctionModel, Vector, as_vector
from .sets import SetModel
from .solver import Trace

_BRUTE_DIM_CAP = 4
_BRUTE_SAMPLE_CAP = 2_000_000


class FDMode(enum.Enum):
    LIMINF_APPROX = "liminf"
    FULL_LIMIT = "full"


@dataclass(frozen=True)
class FDConfig:
    """Grid for the difference-quotient estimator.

    The step grid is t_j = t0 * rho^j for j = 0..levels, i.e. ``levels``
    counts refinements below t0 (21 grid points by default, finest step
    ~9.5e-9, where a 1/t quotient crosses the divergence threshold). Each
    level also probes ``perturbations`` directions w' on a sphere around w
    whose radius min(t, 0.1 ||w||) vanishes with t, since the defining limit
    couples w' -> w with t -> 0.
    """

    t0: float = 1e-2
    rho: float = 0.5
    levels: int = 20
    perturbations: int = 8
    mode: FDMode = FDMode.FULL_LIMIT
    divergence_threshold: float = 1e8
    agreement_tol: float = 1e-4
    seed: int = 20240817

    def __post_init__(self):
        if self.t0 <= 0 or not (0.0 < self.rho < 1.0):
            raise ValueError("need t0 > 0 and rho in (0, 1)")
        if self.levels < 2:
            raise ValueError("need at least two grid levels")


@dataclass
class FDResult:
    estimate: ExtReal
    diverged: bool
    converged: Optional[bool]  # FULL_LIMIT only
    t_grid: list[float] = field(default_factory=list)
    quotients: list[float] = field(default_factory=list)        # w' = w per level
    min_quotients: list[float] = field(default_factory=list)    # incl. perturbations

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate.v,
            "diverged": self.diverged,
            "converged": self.converged,
            "t_grid": self.t_grid,
            "quotients": self.quotients,
            "min_quotients": self.min_quotients,
        }


def fd_subderivative(f: FunctionModel, x: Vector, w: Vector,
                     cfg: Optional[FDConfig] = None) -> FDResult:
    """Difference-quotient estimate of d f(x)(w) straight from the definition.

    LIMINF_APPROX takes the minimum quotient over the whole (t, w') grid; a
    liminf is an infimum of tail behavior, so the grid minimum is the
    conservative estimate of a lower limit. FULL_LIMIT returns the finest
    unperturbed quotient and flags non-convergence when the last three
    levels disagree beyond ``agreement_tol``. Either mode reports +inf when
    every finest-level quotient exceeds the divergence threshold.
    """
    cfg = cfg or FDConfig()
    x = as_vector(x, f.dim, "x")
    w = as_vector(w, f.dim, "w")
    fx = f.value(x).v
    if not math.isfinite(fx):
        raise DomainViolation("fd_subderivative needs f(x) finite")
    wnorm = float(np.linalg.norm(w))
    t_grid = [cfg.t0 * cfg.rho ** j for j in range(cfg.levels + 1)]
    quotients: list[float] = []
    min_quotients: list[float] = []
    for j, t in enumerate(t_grid):
        q = (f.value(x + t * w).v - fx) / t
        level_min = q
        radius = min(t, 0.1 * wnorm)
        if radius > 0 and cfg.perturbations > 0:
            rng = np.random.default_rng([cfg.seed, j])
            for _ in range(cfg.perturbations):
                u = rng.standard_normal(f.dim)
                u *= radius / np.linalg.norm(u)
                qp = (f.value(x + t * (w + u)).v - fx) / t
                level_min = min(level_min, qp)
        quotients.append(q)
        min_quotients.append(level_min)
    diverged = min_quotients[-1] > cfg.divergence_threshold
    if diverged:
        return FDResult(POS_INF, True, None, t_grid, quotients, min_quotients)
    if cfg.mode is FDMode.LIMINF_APPROX:
        return FDResult(ExtReal(min(min_quotients)), False, None,
                        t_grid, quotients, min_quotients)
    tail = quotients[-3:]
    spread = max(tail) - min(tail)
    converged = math.isfinite(spread) and spread <= cfg.agreement_tol
    return FDResult(ExtReal(quotients[-1]), False, converged,
                    t_grid, quotients, min_quotients)


def _l2_sphere_grid(n: int, resolution: float) -> list[Vector]:
    if n == 1:
        return [np.array([-1.0]), np.array([1.0])]
    counts = [max(2, int(math.ceil(math.pi / resolution)) + 1)] * (n - 2)
    counts.append(max(4, int(math.ceil(2 * math.pi / resolution))))
    total = int(np.prod(counts))
    if total > _BRUTE_SAMPLE_CAP:
        raise ValueError(f"resolution {resolution} needs {total} sphere samples")
    axes = [np.linspace(0.0, math.pi, c) for c in counts[:-1]]
    axes.append(np.linspace(0.0, 2 * math.pi, counts[-1], endpoint=False))
    out = []
    for angles in itertools.product(*axes):
        w = np.empty(n)
        s = 1.0
        for i, a in enumerate(angles):
            w[i] = s * math.cos(a)
            s *= math.sin(a)
        w[n - 1] = s
        out.append(w)
    return out


def _simplex_grid(n: int, k: int):
    """All nonnegative integer n-tuples summing to k."""
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _simplex_grid(n - 1, k - first):
            yield (first,) + rest


def _l1_sphere_grid(n: int, resolution: float) -> list[Vector]:
    k = max(1, int(round(1.0 / resolution)))
    out = []
    for combo in _simplex_grid(n, k):
        mags = np.array(combo, dtype=float) / k
        support = [i for i in range(n) if mags[i] > 0]
        for signs in itertools.product([1.0, -1.0], repeat=len(support)):
            w = mags.copy()
            for s, i in zip(signs, support):
                w[i] *= s
            out.append(w)
        if len(out) > _BRUTE_SAMPLE_CAP:
            raise ValueError(f"resolution {resolution} needs too many l1 samples")
    return out


def _linf_sphere_grid(n: int, resolution: float) -> list[Vector]:
    steps = max(2, int(round(2.0 / resolution)) + 1)
    axis = np.linspace(-1.0, 1.0, steps)
    if 2 * n * steps ** (n - 1) > _BRUTE_SAMPLE_CAP:
        raise ValueError(f"resolution {resolution} needs too many linf samples")
    out = []
    for j in range(n):
        for sgn in (1.0, -1.0):
            for rest in itertools.product(axis, repeat=n - 1):
                w = np.empty(n)
                w[j] = sgn
                idx = 0
                for i in range(n):
                    if i != j:
                        w[i] = rest[idx]
                        idx += 1
                out.append(w)
    return out


def brute_force_direction(f: FunctionModel, x: Vector, norm: NormChoice,
                          resolution: float) -> DirectionResult:
    """Dense enumeration of the unit sphere of the chosen norm.

    The grid always includes the signed coordinate vectors (corners are grid
    points by construction for l1/linf) and, when available, the normalized
    negative gradient, so exact solvers are matched on their own candidates.
    Dimension is capped at 4; this is an oracle, not a production search.
    """
    x = as_vector(x, f.dim)
    n = f.dim
    if n > _BRUTE_DIM_CAP:
        raise DimensionTooLarge(f"brute force capped at dimension {_BRUTE_DIM_CAP}")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    cands: list[Vector] = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        cands.append(e.copy())
        cands.append(-e)
    if f.has_gradient:
        g = f.gradient(x)
        nrm = norm_of(g, norm)
        if nrm > 0:
            cands.append(-(g / nrm))
    if norm is NormChoice.L2:
        cands.extend(_l2_sphere_grid(n, resolution))
    elif norm is NormChoice.L1:
        cands.extend(_l1_sphere_grid(n, resolution))
    else:
        cands.extend(_linf_sphere_grid(n, resolution))
    best_w, best_v = None, np.inf
    evals = 0
    for wv in cands:
        d = f.subderivative(x, wv)
        evals += 1
        if d.v < best_v:
            best_w, best_v = wv, d.v
    if best_w is None:
        best_w = cands[0]
    return DirectionResult(best_w, f.subderivative(x, best_w), False, evals + 1)


@dataclass
class DescentSampleReport:
    violations: list[tuple[Vector, Vector, float]]
    max_gap: float
    pairs: int

    @property
    def clean(self) -> bool:
        return not self.violations


def descent_property_sample(f: FunctionModel, L: float,
                            region: tuple[Vector, Vector], pairs: int,
                            seed: int, tol: float = 1e-9) -> DescentSampleReport:
    """Sample the descent inequality f(y) <= f(x) + d f(x)(y-x) + (L/2)||y-x||^2.

    Pairs (x, y) are drawn uniformly in the box ``region``; gaps beyond
    ``tol`` are recorded as violations, and the worst signed gap is reported
    either way.
    """
    if L < 0:
        raise ValueError("L must be nonnegative")
    lo = as_vector(region[0], f.dim, "region lo")
    hi = as_vector(region[1], f.dim, "region hi")
    rng = np.random.default_rng(seed)
    violations = []
    max_gap = -np.inf
    for _ in range(pairs):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        fx = f.value(x).v
        fy = f.value(y).v
        d = f.subderivative(x, y - x).v
        rhs = fx + d + 0.5 * L * float(np.dot(y - x, y - x))
        gap = fy - rhs
        if math.isnan(gap):  # inf - inf from extended values; skip the pair
            continue
        max_gap = max(max_gap, gap)
        if gap > tol:
            violations.append((x, y, gap))
    return DescentSampleReport(violations, float(max_gap), pairs)


def sufficient_decrease_audit(trace: Trace, M: float) -> list[bool]:
    """Per-step check of f(x_{k+1}) - f(x_k) <= -M min{|d_k|, d_k^2}.

    Terminal probe rows (alpha = 0) take no step; their bound is 0 and holds
    iff f did not increase, which is vacuously true since there is no
    successor.
    """
    out = []
    for i, r in enumerate(trace.records):
        f_next = (trace.records[i + 1].f if i + 1 < len(trace.records)
                  else trace.f_final)
        if r.alpha == 0.0 and f_next == r.f:
            out.append(True)
            continue
        bound = -M * min(abs(r.dir_value), r.dir_value ** 2)
        out.append(f_next - r.f <= bound)
    return out


def tangent_membership(G: SemiDiffMap, X: SetModel, x: Vector, w: Vector,
                       tol: float = 1e-9) -> bool:
    """Is w tangent to {x : G(x) in X} at x, via dG(x)(w) in T_X(G(x))?

    Requires G(x) in X; the membership test compares the tangent-cone
    distance of the propagated direction against ``tol``.
    """
    x = as_vector(x, G.dim_in)
    w = as_vector(w, G.dim_in)
    gx = G.eval(x)
    if not X.contains(gx):
        raise NotFeasible("tangent_membership requires G(x) in X")
    dgw = G.semiderivative(x, w)
    return X.tangent_distance(gx, dgw) <= tol
