"""Independent reference computations.

None of these call the package's solvers, weights, or estimators; they work
from the raw moment equations and plain loops.
"""

import math

import numpy as np
from scipy.optimize import root


def expit(z):
    return 1.0 / (1.0 + math.exp(-z))


def stratum_probabilities(x, w):
    """Closed form for a saturated K = 2 design: p = treated share of the stratum."""
    x, w = np.asarray(x), np.asarray(w)
    return np.array([w[x == xi].mean() for xi in x])


def raw_moments(method, X, W, g):
    """Moment equations written literally in terms of p, averaged over N (N1 for ATT)."""
    n = len(W)
    p = np.array([expit(v) for v in X @ g])
    xbar = X.mean(axis=0)
    if method == "mle":
        return sum(X[i] * (W[i] - p[i]) for i in range(n)) / n
    if method == "ipt_treated":
        return sum(W[i] * X[i] / p[i] for i in range(n)) / n - xbar
    if method == "ipt_control":
        return sum((1 - W[i]) * X[i] / (1 - p[i]) for i in range(n)) / n - xbar
    if method == "cbps_ate":
        return sum((W[i] - p[i]) / (p[i] * (1 - p[i])) * X[i] for i in range(n)) / n
    if method == "cbps_att":
        n1 = W.sum()
        xbar1 = sum(W[i] * X[i] for i in range(n)) / n1
        return sum(p[i] * (1 - W[i]) / (1 - p[i]) * X[i] for i in range(n)) / n1 - xbar1
    raise ValueError(method)


def root_solve(method, X, W, start=None):
    """Solve the moment equations directly with MINPACK's hybrid method."""
    g0 = np.zeros(X.shape[1]) if start is None else start
    sol = root(lambda g: raw_moments(method, X, W, g), g0, method="hybr", tol=1e-13)
    resid = np.max(np.abs(raw_moments(method, X, W, sol.x)))
    assert resid < 1e-10, (sol.message, resid)
    return sol.x


def loop_ate(X, W, Y, p1, p0, kind, b1=None, b0=None, normalize=False):
    """Textbook ATE formulas with explicit sums."""
    n = len(Y)
    s1 = sum(W[i] / p1[i] for i in range(n))
    s0 = sum((1 - W[i]) / (1 - p0[i]) for i in range(n))
    d1 = s1 if normalize else n
    d0 = s0 if normalize else n
    if kind == "ipw":
        mu1 = sum(W[i] * Y[i] / p1[i] for i in range(n)) / d1
        mu0 = sum((1 - W[i]) * Y[i] / (1 - p0[i]) for i in range(n)) / d0
    elif kind == "aipw":
        mu1 = sum(W[i] * (Y[i] - X[i] @ b1) / p1[i] for i in range(n)) / d1 + np.mean(X @ b1)
        mu0 = sum((1 - W[i]) * (Y[i] - X[i] @ b0) / (1 - p0[i]) for i in range(n)) / d0
        mu0 += np.mean(X @ b0)
    elif kind == "ipwra":
        # weighted normal equations, solved directly
        mu = []
        arms = (
            [W[i] / p1[i] for i in range(n)],
            [(1 - W[i]) / (1 - p0[i]) for i in range(n)],
        )
        for wt in arms:
            A = sum(wt[i] * np.outer(X[i], X[i]) for i in range(n))
            c = sum(wt[i] * X[i] * Y[i] for i in range(n))
            mu.append(X.mean(axis=0) @ np.linalg.solve(A, c))
        mu1, mu0 = mu
    else:
        raise ValueError(kind)
    return mu1 - mu0, mu1, mu0


def central_gradient(f, g, h=1e-6):
    out = np.zeros_like(g)
    for j in range(len(g)):
        e = np.zeros_like(g)
        e[j] = h
        out[j] = (f(g + e) - f(g - e)) / (2 * h)
    return out
