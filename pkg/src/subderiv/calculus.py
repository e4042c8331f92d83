"""Combinators that build new oracles from old ones via exact calculus rules.

The chain and sum rules used here hold as equalities for the supported
structures: sums where at most one addend is extended-valued (or all are
semi-differentiable), compositions g o F with F smooth or semi-differentiable.
The qualification conditions behind those equalities (relative Lipschitz
continuity of g, directional metric subregularity) are contracts on the
inputs, never verified at runtime; every bundled composition satisfies them
by construction.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyList, NonpositiveScale
from .extreal import ExtReal, ext_add
from .model import FunctionModel, ScalarPart, Vector, as_vector, check_same_dim
from .sets import SetModel, distance_to_set

_ACTIVE_TIE_TOL = 1e-12


class SemiDiffMap:
    """Vector-valued map with a directional derivative taken as a full limit.

    ``semiderivative(x, .)`` is continuous and positively homogeneous of
    degree 1 in the direction.
    """

    def __init__(self, dim_in: int, dim_out: int,
                 eval_fn: Callable[[Vector], Vector],
                 semiderivative_fn: Callable[[Vector, Vector], Vector]):
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self._eval = eval_fn
        self._dir = semiderivative_fn

    def eval(self, x: Vector) -> Vector:
        return np.asarray(self._eval(x), dtype=float)

    def semiderivative(self, x: Vector, w: Vector) -> Vector:
        return np.asarray(self._dir(x, w), dtype=float)


class SmoothMap(SemiDiffMap):
    """Continuously differentiable map; the semi-derivative is the Jacobian action.

    ``smoothness_constant`` is a Lipschitz modulus of the derivative, when known.
    """

    def __init__(self, dim_in: int, dim_out: int,
                 eval_fn: Callable[[Vector], Vector],
                 jacobian_apply_fn: Callable[[Vector, Vector], Vector],
                 smoothness_constant: Optional[float] = None):
        super().__init__(dim_in, dim_out, eval_fn, jacobian_apply_fn)
        self.smoothness_constant = smoothness_constant

    def jacobian_apply(self, x: Vector, w: Vector) -> Vector:
        return self.semiderivative(x, w)


def affine_map(A, b=None) -> SmoothMap:
    """x -> A x + b. The derivative is constant, so the smoothness modulus is 0."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    bv = np.zeros(m) if b is None else as_vector(b, m, "b")
    return SmoothMap(n, m, lambda x: A @ x + bv, lambda x, w: A @ w,
                     smoothness_constant=0.0)


def identity_map(n: int) -> SmoothMap:
    return SmoothMap(n, n, lambda x: np.asarray(x, dtype=float),
                     lambda x, w: np.asarray(w, dtype=float), smoothness_constant=0.0)


def relu_direction(a: Vector, da: Vector) -> Vector:
    """Directional derivative of componentwise max{0, .} at pre-activation a.

    At a zero pre-activation the limit forces max{0, da}; this is what makes
    the toolkit reject points that coarser stationarity notions accept.
    """
    return np.where(a > 0, da, np.where(a < 0, 0.0, np.maximum(da, 0.0)))


def relu_map(n: int) -> SemiDiffMap:
    """Componentwise max{0, x} with its exact semi-derivative."""
    return SemiDiffMap(n, n, lambda x: np.maximum(x, 0.0),
                       lambda x, w: relu_direction(np.asarray(x, dtype=float),
                                                   np.asarray(w, dtype=float)))


class _Sum(FunctionModel):
    def __init__(self, models: Sequence[FunctionModel]):
        if not models:
            raise EmptyList("sum of zero models")
        self._dim = check_same_dim(models)
        self.models = list(models)
        self.semi_differentiable = all(m.semi_differentiable for m in self.models)
        self.extended_valued = any(m.extended_valued for m in self.models)
        self.subderivative_concave = all(m.subderivative_concave for m in self.models)
        self.has_gradient = all(m.has_gradient for m in self.models)
        self.is_separable = all(m.has_gradient or m.is_separable for m in self.models)
        Ls = [m.descent_constant for m in self.models]
        self.descent_constant = float(sum(Ls)) if all(L is not None for L in Ls) else None
        lbs = [m.lower_bound for m in self.models]
        self.lower_bound = float(sum(lbs)) if all(b is not None for b in lbs) else None

    @property
    def dim(self) -> int:
        return self._dim

    def value(self, x: Vector) -> ExtReal:
        # Left-to-right over the member list; this order is the documented
        # floating-point contract for sum additivity.
        acc = self.models[0].value(x)
        for m in self.models[1:]:
            acc = ext_add(acc, m.value(x))
        return acc

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        acc = self.models[0].subderivative(x, w)
        for m in self.models[1:]:
            acc = ext_add(acc, m.subderivative(x, w))
        return acc

    def gradient(self, x: Vector) -> Vector:
        g = self.models[0].gradient(x).copy()
        for m in self.models[1:]:
            g += m.gradient(x)
        return g

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        grad = np.zeros(self.dim)
        parts: list[Optional[ScalarPart]] = [None] * self.dim
        for m in self.models:
            if m.has_gradient:
                grad = grad + m.gradient(x)
            else:
                g2, p2 = m.separable_parts(x)
                grad = grad + g2
                for i in range(self.dim):
                    parts[i] = p2[i] if parts[i] is None else _add_parts(parts[i], p2[i])
        zero = ScalarPart(fn=lambda t: 0.0, piecewise_linear=True)
        return grad, [p if p is not None else zero for p in parts]


def _add_parts(p: ScalarPart, q: ScalarPart) -> ScalarPart:
    kinks = tuple(sorted(set(p.kinks) | set(q.kinks)))
    return ScalarPart(fn=lambda t, a=p.fn, b=q.fn: a(t) + b(t), kinks=kinks,
                      piecewise_linear=p.piecewise_linear and q.piecewise_linear)


def sum_models(models: Sequence[FunctionModel]) -> FunctionModel:
    """Pointwise sum; subderivatives add under the sum rule.

    Contract: at every evaluation point at most one member is extended-valued,
    or all members are semi-differentiable. Descent constants add when every
    member advertises one.
    """
    return _Sum(models)


class _Scaled(FunctionModel):
    def __init__(self, inner: FunctionModel, lam: float):
        self.inner = inner
        self.lam = float(lam)
        self.semi_differentiable = inner.semi_differentiable
        self.extended_valued = inner.extended_valued
        self.subderivative_concave = inner.subderivative_concave
        self.has_gradient = inner.has_gradient
        self.is_separable = inner.is_separable
        self.descent_constant = (None if inner.descent_constant is None
                                 else lam * inner.descent_constant)
        self.lower_bound = None if inner.lower_bound is None else lam * inner.lower_bound

    @property
    def dim(self) -> int:
        return self.inner.dim

    def value(self, x: Vector) -> ExtReal:
        return self.inner.value(x).scaled(self.lam)

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        return self.inner.subderivative(x, w).scaled(self.lam)

    def gradient(self, x: Vector) -> Vector:
        return self.lam * self.inner.gradient(x)

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        g, parts = self.inner.separable_parts(x)
        lam = self.lam
        scaled = [ScalarPart(fn=lambda t, f=p.fn: lam * f(t), kinks=p.kinks,
                             piecewise_linear=p.piecewise_linear) for p in parts]
        return lam * g, scaled


def scale(model: FunctionModel, lam: float) -> FunctionModel:
    """lam * f for lam > 0; value, subderivative and descent constant scale."""
    if lam <= 0:
        raise NonpositiveScale(f"scale factor must be positive, got {lam}")
    return _Scaled(model, lam)


class _SmoothComposite(FunctionModel):
    def __init__(self, g: FunctionModel, F: SmoothMap, concave_modulus: Optional[float]):
        if g.dim != F.dim_out:
            raise DimensionMismatch(
                f"g expects dimension {g.dim}, F produces {F.dim_out}")
        self.g = g
        self.F = F
        self.semi_differentiable = g.semi_differentiable
        self.extended_valued = g.extended_valued
        self.subderivative_concave = g.subderivative_concave
        self.descent_constant = None
        if concave_modulus is not None and F.smoothness_constant is not None:
            self.descent_constant = concave_modulus * F.smoothness_constant

    @property
    def dim(self) -> int:
        return self.F.dim_in

    def value(self, x: Vector) -> ExtReal:
        return self.g.value(self.F.eval(x))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        return self.g.subderivative(self.F.eval(x), self.F.jacobian_apply(x, w))


def precompose_smooth(g: FunctionModel, F: SmoothMap,
                      concave_modulus: Optional[float] = None) -> FunctionModel:
    """g o F for smooth F: d(g o F)(x)(w) = d g(F(x))(dF(x) w).

    Contract: g is Lipschitz continuous relative to its domain and the
    directional qualification condition holds along queried directions (both
    automatic for the bundled finite-valued g). When g is concave with a known
    modulus over the region of interest and F carries a smoothness constant L,
    the composite has the descent property with constant modulus * L; the
    modulus must be supplied by the caller since it is not computable from an
    oracle.
    """
    return _SmoothComposite(g, F, concave_modulus)


class _SemiDiffComposite(FunctionModel):
    def __init__(self, g: FunctionModel, F: SemiDiffMap):
        if g.dim != F.dim_out:
            raise DimensionMismatch(
                f"g expects dimension {g.dim}, F produces {F.dim_out}")
        if not g.semi_differentiable:
            raise ValueError("precompose_semidiff needs a semi-differentiable outer g")
        self.g = g
        self.F = F
        self.semi_differentiable = True

    @property
    def dim(self) -> int:
        return self.F.dim_in

    def value(self, x: Vector) -> ExtReal:
        return self.g.value(self.F.eval(x))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        return self.g.subderivative(self.F.eval(x), self.F.semiderivative(x, w))


def _compose_maps(G: SemiDiffMap, F: SemiDiffMap) -> SemiDiffMap:
    if G.dim_in != F.dim_out:
        raise DimensionMismatch(
            f"G expects dimension {G.dim_in}, F produces {F.dim_out}")
    return SemiDiffMap(
        F.dim_in, G.dim_out,
        lambda x: G.eval(F.eval(x)),
        lambda x, w: G.semiderivative(F.eval(x), F.semiderivative(x, w)))


def precompose_semidiff(g, F: SemiDiffMap):
    """g o F for semi-differentiable F, returning the same kind as g.

    Accepts a semi-differentiable FunctionModel (result: FunctionModel) or a
    SemiDiffMap (result: SemiDiffMap). Either way the directional derivative
    composes exactly: d(g o F)(x)(w) = d g(F(x))(dF(x)(w)).
    """
    if isinstance(g, FunctionModel):
        return _SemiDiffComposite(g, F)
    if isinstance(g, SemiDiffMap):
        return _compose_maps(g, F)
    raise TypeError(f"cannot precompose {type(g).__name__}")


def forward_chain(layers: Sequence[SemiDiffMap], x: Vector, w: Vector
                  ) -> tuple[Vector, Vector]:
    """One forward pass through a composition, propagating value and direction.

    Returns ((F_k o ... o F_1)(x), its semi-derivative at x applied to w).
    The empty composition is the identity.
    """
    v = np.asarray(x, dtype=float)
    u = np.asarray(w, dtype=float)
    if v.shape != u.shape:
        raise DimensionMismatch("x and w must share the input dimension")
    for i, layer in enumerate(layers):
        if v.shape[0] != layer.dim_in:
            raise DimensionMismatch(
                f"layer {i} expects dimension {layer.dim_in}, got {v.shape[0]}")
        u = layer.semiderivative(v, u)
        v = layer.eval(v)
    return v, u


class _PointwiseExtremum(FunctionModel):
    def __init__(self, models: Sequence[FunctionModel], take_max: bool):
        if not models:
            raise EmptyList("pointwise extremum of zero models")
        self._dim = check_same_dim(models)
        if not all(m.semi_differentiable for m in models):
            raise ValueError("pointwise min/max needs semi-differentiable members")
        self.models = list(models)
        self.take_max = take_max
        self.semi_differentiable = True
        if not take_max and len(self.models) > 0:
            self.subderivative_concave = all(m.subderivative_concave for m in self.models)

    @property
    def dim(self) -> int:
        return self._dim

    def _values(self, x: Vector) -> list[float]:
        return [m.value(x).v for m in self.models]

    def value(self, x: Vector) -> ExtReal:
        vals = self._values(x)
        return ExtReal(max(vals) if self.take_max else min(vals))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        vals = self._values(x)
        best = max(vals) if self.take_max else min(vals)
        # Exact float ties would drop genuinely active branches produced by
        # arithmetic noise, hence the absolute tolerance.
        active = [i for i, v in enumerate(vals) if abs(v - best) <= _ACTIVE_TIE_TOL]
        ds = [self.models[i].subderivative(x, w).v for i in active]
        return ExtReal(max(ds) if self.take_max else min(ds))


def pointwise_max(models: Sequence[FunctionModel]) -> FunctionModel:
    """max_i f_i of finite-valued semi-differentiable models.

    The subderivative takes the max of the member subderivatives over the
    active set {i : f_i(x) = f(x)}.
    """
    return _PointwiseExtremum(models, take_max=True)


def pointwise_min(models: Sequence[FunctionModel]) -> FunctionModel:
    """min_i f_i; active-set rule with min in place of max."""
    return _PointwiseExtremum(models, take_max=False)


def penalize(phi: FunctionModel, G, X: SetModel, rho: float) -> FunctionModel:
    """phi(x) + rho * dist(G(x); X), the exact-penalty objective.

    G may be a SmoothMap or a SemiDiffMap. The result is semi-differentiable
    when phi and G are and X is geometrically derivable.
    """
    if rho <= 0:
        raise NonpositiveScale(f"penalty constant must be positive, got {rho}")
    dist = distance_to_set(X)
    if isinstance(G, SmoothMap):
        comp = precompose_smooth(dist, G)
    elif isinstance(G, SemiDiffMap):
        if not dist.semi_differentiable:
            raise ValueError(
                "penalize with a non-smooth G needs a geometrically derivable X")
        comp = precompose_semidiff(dist, G)
    else:
        raise TypeError(f"G must be a SmoothMap or SemiDiffMap, got {type(G).__name__}")
    return sum_models([phi, scale(comp, rho)])


def envelope_composite_descent_constant(L: float, r: float) -> float:
    """Descent constant L/r for a Moreau-smoothed convex outer over an L-smooth map."""
    if r <= 0:
        raise ValueError("r must be positive")
    return L / r


def dc_envelope_descent_constant(L: float, r: float) -> float:
    """Descent constant L(1+r)/r for [e_r g1] o F1 - g2 o F2 with convex g_i
    and L-smooth F_i (the envelope-smoothed difference of composites)."""
    if r <= 0:
        raise ValueError("r must be positive")
    return L * (1.0 + r) / r
