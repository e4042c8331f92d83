"""Concrete objective oracles with closed-form subderivatives.

Each oracle pairs a value formula with the exact lower directional derivative
derived for it, so the finite-difference harness in ``verify`` can be played
against it as an independent check.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import SemiDiffMap, forward_chain, relu_direction
from .errors import DimensionMismatch, ProxUnavailable
from .extreal import ExtReal, POS_INF
from .model import FunctionModel, ScalarPart, Vector, as_vector


class L1Norm(FunctionModel):
    """lam * ||x||_1 with the sign-split directional derivative.

    d f(x)(w) = sum_{x_i>0} lam w_i + sum_{x_i<0} (-lam w_i) + sum_{x_i=0} lam |w_i|.
    Convex, hence no descent constant is advertised.
    """

    semi_differentiable = True
    is_separable = True
    lower_bound = 0.0

    def __init__(self, n: int, lam: float = 1.0):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self._n = int(n)
        self.lam = float(lam)

    @property
    def dim(self) -> int:
        return self._n

    def value(self, x: Vector) -> ExtReal:
        return ExtReal(self.lam * float(np.sum(np.abs(x))))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        s = np.where(x > 0, w, np.where(x < 0, -w, np.abs(w)))
        return ExtReal(self.lam * float(np.sum(s)))

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        lam = self.lam
        parts = []
        for xi in np.asarray(x, dtype=float):
            if xi > 0:
                parts.append(ScalarPart(fn=lambda t, c=lam: c * t, piecewise_linear=True))
            elif xi < 0:
                parts.append(ScalarPart(fn=lambda t, c=lam: -c * t, piecewise_linear=True))
            else:
                parts.append(ScalarPart(fn=lambda t, c=lam: c * abs(t), kinks=(0.0,),
                                        piecewise_linear=True))
        return np.zeros(self.dim), parts


class NegL1Norm(FunctionModel):
    """-lam * ||x||_1; concave, so the descent property holds with constant 0."""

    semi_differentiable = True
    is_separable = True
    subderivative_concave = True
    descent_constant = 0.0

    def __init__(self, n: int, lam: float = 1.0):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self._n = int(n)
        self.lam = float(lam)

    @property
    def dim(self) -> int:
        return self._n

    def value(self, x: Vector) -> ExtReal:
        return ExtReal(-self.lam * float(np.sum(np.abs(x))))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        s = np.where(x > 0, -w, np.where(x < 0, w, -np.abs(w)))
        return ExtReal(self.lam * float(np.sum(s)))

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        lam = self.lam
        parts = []
        for xi in np.asarray(x, dtype=float):
            if xi > 0:
                parts.append(ScalarPart(fn=lambda t, c=lam: -c * t, piecewise_linear=True))
            elif xi < 0:
                parts.append(ScalarPart(fn=lambda t, c=lam: c * t, piecewise_linear=True))
            else:
                parts.append(ScalarPart(fn=lambda t, c=lam: -c * abs(t), kinks=(0.0,),
                                        piecewise_linear=True))
        return np.zeros(self.dim), parts


class ZeroNormComposite(FunctionModel):
    """||A x + b||_0, the nonzero count of the affine image.

    The subderivative is combinatorial: 0 when the support of A w is contained
    in the support of A x + b, +inf otherwise. Support membership compares
    |y_i| against ``support_tol``; the default 0 honors the exact formula, the
    override serves noisy data (any nonzero tolerance changes the answer
    discontinuously). Directionally lower regular but not semi-differentiable.
    """

    semi_differentiable = False
    directionally_lower_regular = True
    lower_bound = 0.0

    def __init__(self, A, b, support_tol: float = 0.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = as_vector(b, self.A.shape[0], "b")
        self.support_tol = float(support_tol)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def _support(self, y: Vector) -> np.ndarray:
        return np.abs(y) > self.support_tol

    def value(self, x: Vector) -> ExtReal:
        return ExtReal(float(np.count_nonzero(self._support(self.A @ x + self.b))))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        new = self._support(self.A @ w) & ~self._support(self.A @ x + self.b)
        return ExtReal(0.0) if not new.any() else POS_INF


class SmoothModel(FunctionModel):
    """Differentiable objective: d f(x)(w) = <grad f(x), w>."""

    semi_differentiable = True
    has_gradient = True
    subderivative_concave = True  # linear in w

    def __init__(self, n: int, f: Callable[[Vector], float],
                 grad: Callable[[Vector], Vector],
                 smoothness_constant: Optional[float] = None,
                 lower_bound: Optional[float] = None):
        self._n = int(n)
        self._f = f
        self._grad = grad
        self.descent_constant = smoothness_constant
        self.lower_bound = lower_bound

    @property
    def dim(self) -> int:
        return self._n

    def value(self, x: Vector) -> ExtReal:
        return ExtReal(float(self._f(x)))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        return ExtReal(float(np.dot(self._grad(x), w)))

    def gradient(self, x: Vector) -> Vector:
        return np.asarray(self._grad(x), dtype=float)


def smooth_model(n: int, f, grad, smoothness_constant=None, lower_bound=None) -> SmoothModel:
    """Wrap value/gradient callables; ``grad`` must be the true gradient."""
    return SmoothModel(n, f, grad, smoothness_constant, lower_bound)


def quadratic_model(c: Vector) -> SmoothModel:
    """(1/2) ||x - c||^2, the workhorse smooth fixture."""
    c = as_vector(c, name="c")
    return SmoothModel(c.shape[0],
                       lambda x: 0.5 * float(np.dot(x - c, x - c)),
                       lambda x: x - c,
                       smoothness_constant=1.0, lower_bound=0.0)


def linear_model(c: Vector) -> SmoothModel:
    """<c, x>; unbounded below, used by the diminishing-schedule fixtures."""
    c = as_vector(c, name="c")
    return SmoothModel(c.shape[0], lambda x: float(np.dot(c, x)), lambda x: c.copy())


# ---------------------------------------------------------------------------
# Moreau envelopes.  e_r f(x) = inf_y { ||x - y||^2 / (2r) + f(y) } has the
# descent property with constant 1/r whenever f is prox-bounded with c > r.
# The subderivative is taken as the directional derivative of the closed-form
# envelope (a smooth quadratic plus an infimum of affine functions), which
# evaluates to min over the prox set of <x - y, w> / r; differentiating
# through the argmin would break down where the prox is set-valued.
# ---------------------------------------------------------------------------


class ScalarProxInner:
    """Separable scalar inner function: a cost and its full prox set."""

    unique_prox = True
    min_cost: Optional[float] = None  # inf of the cost, when known

    def cost(self, y: float) -> float:
        raise NotImplementedError

    def prox_candidates(self, t: float, r: float) -> tuple[float, ...]:
        """All minimizers of (y - t)^2 / (2r) + cost(y)."""
        raise NotImplementedError


class L1Inner(ScalarProxInner):
    """lam |y|; the prox is the soft threshold, always a singleton."""

    min_cost = 0.0

    def __init__(self, lam: float = 1.0):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)

    def cost(self, y: float) -> float:
        return self.lam * abs(y)

    def prox_candidates(self, t: float, r: float) -> tuple[float, ...]:
        s = self.lam * r
        return (math.copysign(max(abs(t) - s, 0.0), t),)


class ZeroNormInner(ScalarProxInner):
    """The 0/1 nonzero indicator; the prox is the hard threshold.

    Both y = 0 and y = t minimize at |t| = sqrt(2r), so the prox is set-valued
    there and the envelope min(t^2 / (2r), 1) has a kink.
    """

    unique_prox = False
    min_cost = 0.0

    def cost(self, y: float) -> float:
        return 0.0 if y == 0.0 else 1.0

    def prox_candidates(self, t: float, r: float) -> tuple[float, ...]:
        thresh = math.sqrt(2.0 * r)
        if abs(t) < thresh:
            return (0.0,)
        if abs(t) > thresh:
            return (t,)
        return (0.0, t)


class UserScalarInner(ScalarProxInner):
    """Separable scalar inner with a user-supplied prox.

    ``prox`` must return every minimizer; returning a strict subset makes the
    envelope's subderivative an upper bound only.
    """

    unique_prox = False

    def __init__(self, cost: Callable[[float], float],
                 prox: Callable[[float, float], tuple[float, ...]]):
        self._cost = cost
        self._prox = prox

    def cost(self, y: float) -> float:
        return float(self._cost(y))

    def prox_candidates(self, t: float, r: float) -> tuple[float, ...]:
        return tuple(float(y) for y in self._prox(t, r))


class SeparableMoreau(FunctionModel):
    """Moreau envelope of a separable scalar inner, applied componentwise."""

    semi_differentiable = True
    is_separable = True

    def __init__(self, n: int, inner: ScalarProxInner, r: float):
        if r <= 0:
            raise ValueError("r must be positive")
        self._n = int(n)
        self.inner = inner
        self.r = float(r)
        self.descent_constant = 1.0 / self.r
        self.has_gradient = inner.unique_prox
        # The envelope is bounded below by the infimum of the inner cost.
        self.lower_bound = (None if inner.min_cost is None
                            else self._n * inner.min_cost)

    @property
    def dim(self) -> int:
        return self._n

    def _component_value(self, t: float) -> float:
        r = self.r
        return min((t - y) ** 2 / (2.0 * r) + self.inner.cost(y)
                   for y in self.inner.prox_candidates(t, r))

    def value(self, x: Vector) -> ExtReal:
        return ExtReal(sum(self._component_value(float(t)) for t in x))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        r = self.r
        total = 0.0
        for t, wi in zip(x, w):
            cands = self.inner.prox_candidates(float(t), r)
            total += min((float(t) - y) * float(wi) / r for y in cands)
        return ExtReal(total)

    def gradient(self, x: Vector) -> Vector:
        if not self.inner.unique_prox:
            return super().gradient(x)
        prox = np.array([self.inner.prox_candidates(float(t), self.r)[0] for t in x])
        return (np.asarray(x, dtype=float) - prox) / self.r

    def separable_parts(self, x: Vector) -> tuple[Vector, list[ScalarPart]]:
        r = self.r
        parts = []
        for t in np.asarray(x, dtype=float):
            slopes = tuple((float(t) - y) / r for y in self.inner.prox_candidates(float(t), r))
            if len(slopes) == 1:
                parts.append(ScalarPart(fn=lambda u, s=slopes[0]: s * u,
                                        piecewise_linear=True))
            else:
                parts.append(ScalarPart(fn=lambda u, ss=slopes: min(s * u for s in ss),
                                        kinks=(0.0,), piecewise_linear=True))
        return np.zeros(self.dim), parts


class QuadraticInner:
    """Convex quadratic (1/2) y' Q y + c' y with Q positive semidefinite."""

    def __init__(self, Q, c):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        self.c = as_vector(c, self.Q.shape[0], "c")
        if self.Q.shape[0] != self.Q.shape[1]:
            raise DimensionMismatch("Q must be square")


class QuadraticMoreau(FunctionModel):
    """Moreau envelope of a convex quadratic; the prox is a linear solve."""

    semi_differentiable = True
    has_gradient = True
    subderivative_concave = True

    def __init__(self, inner: QuadraticInner, r: float):
        if r <= 0:
            raise ValueError("r must be positive")
        self.inner = inner
        self.r = float(r)
        self.descent_constant = 1.0 / self.r
        n = inner.Q.shape[0]
        self._n = n
        self._K = inner.Q + np.eye(n) / self.r

    @property
    def dim(self) -> int:
        return self._n

    def _prox(self, x: Vector) -> Vector:
        return np.linalg.solve(self._K, np.asarray(x, dtype=float) / self.r - self.inner.c)

    def value(self, x: Vector) -> ExtReal:
        y = self._prox(x)
        q = 0.5 * float(y @ self.inner.Q @ y) + float(self.inner.c @ y)
        return ExtReal(float(np.dot(x - y, x - y)) / (2.0 * self.r) + q)

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        return ExtReal(float(np.dot(self.gradient(x), w)))

    def gradient(self, x: Vector) -> Vector:
        return (np.asarray(x, dtype=float) - self._prox(x)) / self.r


def moreau_envelope(inner, r: float, n: Optional[int] = None) -> FunctionModel:
    """Moreau envelope oracle for a bundled prox-friendly inner function.

    ``inner`` is a ScalarProxInner (separable; ``n`` gives the dimension,
    default 1) or a QuadraticInner. The inner must be prox-bounded with a
    constant exceeding r; that is a contract, not a runtime check.
    """
    if isinstance(inner, ScalarProxInner):
        return SeparableMoreau(1 if n is None else n, inner, r)
    if isinstance(inner, QuadraticInner):
        return QuadraticMoreau(inner, r)
    raise ProxUnavailable(
        f"no closed-form prox bundled for {type(inner).__name__}")


class ReLUNetworkLoss(FunctionModel):
    """Mean squared loss of a fully connected ReLU network over its parameters.

    The parameter vector packs (W^1, b^1, ..., W^N, b^N) row-major. The
    directional derivative is propagated with one forward pass per datum
    through state-carrying layers (theta rides along so each layer is
    semi-differentiable in the joint variable), then through the smooth
    squared-loss outer derivative.

    ``final_relu`` controls whether the last layer is passed through the
    activation as well; the bundled fixtures use True.
    """

    semi_differentiable = True

    def __init__(self, widths: Sequence[int], data: Sequence[tuple], final_relu: bool = True):
        self.widths = [int(w) for w in widths]
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise DimensionMismatch("widths must list at least two positive layer sizes")
        self.final_relu = bool(final_relu)
        self.data = [(as_vector(x, self.widths[0], "x"),
                      as_vector(y, self.widths[-1], "y")) for x, y in data]
        if not self.data:
            raise ValueError("at least one training pair is required")
        self._offsets = []
        off = 0
        for i in range(1, len(self.widths)):
            n_out, n_in = self.widths[i], self.widths[i - 1]
            self._offsets.append((off, off + n_out * n_in, off + n_out * n_in + n_out))
            off = self._offsets[-1][2]
        self._p = off
        self._layers = self.state_layers()

    @property
    def dim(self) -> int:
        return self._p

    def _unpack(self, theta: Vector, i: int) -> tuple[np.ndarray, Vector]:
        w0, w1, w2 = self._offsets[i]
        n_out, n_in = self.widths[i + 1], self.widths[i]
        return theta[w0:w1].reshape(n_out, n_in), theta[w1:w2]

    def pack(self, weights: Sequence[np.ndarray], biases: Sequence[Vector]) -> Vector:
        """Flatten per-layer weights and biases into a parameter vector."""
        chunks = []
        for W, b in zip(weights, biases):
            chunks.append(np.asarray(W, dtype=float).ravel())
            chunks.append(np.asarray(b, dtype=float).ravel())
        theta = np.concatenate(chunks)
        if theta.shape[0] != self._p:
            raise DimensionMismatch(
                f"packed {theta.shape[0]} parameters, expected {self._p}")
        return theta

    def state_layers(self, theta_dim: Optional[int] = None) -> list[SemiDiffMap]:
        """The network as state-carrying layers over (theta, z)."""
        p = self._p if theta_dim is None else theta_dim
        layers = []
        n_layers = len(self.widths) - 1
        for i in range(n_layers):
            act = self.final_relu or i < n_layers - 1
            layers.append(self._carry_layer(i, p, act))
        return layers

    def _carry_layer(self, i: int, p: int, act: bool) -> SemiDiffMap:
        n_in, n_out = self.widths[i], self.widths[i + 1]

        def ev(s, i=i, p=p, act=act):
            theta, z = s[:p], s[p:]
            W, b = self._unpack(theta, i)
            a = W @ z - b
            return np.concatenate([theta, np.maximum(a, 0.0) if act else a])

        def dr(s, ds, i=i, p=p, act=act):
            theta, z = s[:p], s[p:]
            dtheta, dz = ds[:p], ds[p:]
            W, b = self._unpack(theta, i)
            dW, db = self._unpack(dtheta, i)
            a = W @ z - b
            da = dW @ z + W @ dz - db
            return np.concatenate([dtheta, relu_direction(a, da) if act else da])

        return SemiDiffMap(p + n_in, p + n_out, ev, dr)

    def _forward(self, theta: Vector, dtheta: Vector, x: Vector):
        s0 = np.concatenate([theta, x])
        ds0 = np.concatenate([dtheta, np.zeros_like(x)])
        s, ds = forward_chain(self._layers, s0, ds0)
        return s[self._p:], ds[self._p:]

    def preactivations(self, theta: Vector) -> list[list[Vector]]:
        """Per-datum, per-layer pre-activation vectors W z - b.

        Handy for detecting activation ties (zero pre-activations), where the
        loss is still semi-differentiable but finite differences converge
        slowly.
        """
        theta = as_vector(theta, self._p, "theta")
        out = []
        n_layers = len(self.widths) - 1
        for xi, _ in self.data:
            z = xi
            acts = []
            for i in range(n_layers):
                W, b = self._unpack(theta, i)
                a = W @ z - b
                acts.append(a)
                z = np.maximum(a, 0.0) if (self.final_relu or i < n_layers - 1) else a
            out.append(acts)
        return out

    def value(self, x: Vector) -> ExtReal:
        theta = as_vector(x, self._p, "theta")
        zero = np.zeros(self._p)
        total = 0.0
        for xi, yi in self.data:
            out, _ = self._forward(theta, zero, xi)
            total += float(np.dot(out - yi, out - yi))
        return ExtReal(total / len(self.data))

    def subderivative(self, x: Vector, w: Vector) -> ExtReal:
        theta = as_vector(x, self._p, "theta")
        dtheta = as_vector(w, self._p, "dtheta")
        total = 0.0
        for xi, yi in self.data:
            out, dout = self._forward(theta, dtheta, xi)
            total += 2.0 * float(np.dot(out - yi, dout))
        return ExtReal(total / len(self.data))


def relu_network_loss(widths: Sequence[int], data: Sequence[tuple],
                      final_relu: bool = True) -> ReLUNetworkLoss:
    """Mean squared ReLU-network loss over the packed parameter space."""
    return ReLUNetworkLoss(widths, data, final_relu)


def l1_norm(n: int, lam: float = 1.0) -> L1Norm:
    """Weighted l1 norm oracle."""
    return L1Norm(n, lam)


def neg_l1_norm(n: int, lam: float = 1.0) -> NegL1Norm:
    """Negated weighted l1 norm oracle (descent constant 0)."""
    return NegL1Norm(n, lam)


def zero_norm_composite(A, b, support_tol: float = 0.0) -> ZeroNormComposite:
    """Nonzero count of A x + b with its combinatorial subderivative."""
    return ZeroNormComposite(A, b, support_tol)
