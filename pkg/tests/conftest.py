import numpy as np
import pytest

import subderiv as sd


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def l1():
    return sd.L1Norm(3)


@pytest.fixture
def quad2():
    return sd.quadratic_model(np.zeros(2))


@pytest.fixture
def dc1():
    """(1/2) x^2 - |x| on the line; d-stationary points are x = +-1 and 0."""
    return sd.sum_models([sd.quadratic_model(np.zeros(1)), sd.NegL1Norm(1)])


def make_neg_relu():
    """f(x) = -max{0, x} on the line, written as min{0, -x}."""
    zero = sd.smooth_model(1, lambda x: 0.0, lambda x: np.zeros(1))
    neg_id = sd.smooth_model(1, lambda x: -float(x[0]), lambda x: -np.ones(1))
    return sd.pointwise_min([zero, neg_id])


def quotient(f, x, w, t):
    """Plain one-sided difference quotient used as a hand oracle in tests."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    return (f(x + t * w) - f(x)) / t


def l1_table_direction(grad, x, lam):
    """Closed-form minimizer of <grad, w> + d(lam||.||_1)(x)(w) over the
    sup-norm ball, written straight from the seven active-index sets."""
    n = len(x)
    w = np.zeros(n)
    s = np.zeros(n)
    for i in range(n):
        c = grad[i]
        if x[i] > 0:
            if c + lam >= 0:      # I1
                w[i], s[i] = -1.0, -(c + lam)
            else:                 # I2
                w[i], s[i] = 1.0, c + lam
        elif x[i] < 0:
            if c - lam >= 0:      # I3
                w[i], s[i] = -1.0, -(c - lam)
            else:                 # I4
                w[i], s[i] = 1.0, c - lam
        else:
            if c - lam >= 0:      # I5
                w[i], s[i] = -1.0, -c + lam
            elif c + lam <= 0:    # I6
                w[i], s[i] = 1.0, c + lam
            else:                 # I7
                w[i], s[i] = 0.0, 0.0
    return w, s
