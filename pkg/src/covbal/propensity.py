"""Propensity-score fitting: logit MLE and the exactly identified balancing systems.

Every method solves K equations in K unknowns. For the logistic link each
balancing system is the stationarity condition of a strictly convex
potential, so all of them are solved by damped Newton on that potential:

=============  ==========================================================
method         potential (times N)
=============  ==========================================================
mle            sum log(1 + exp(x g)) - sum W x g
ipt_treated    sum_{W=1} exp(-x g) + (sum_{W=0} x) g
ipt_control    sum_{W=0} exp(x g) - (sum_{W=1} x) g
cbps_ate       sum_{W=1} exp(-x g) + sum_{W=0} exp(x g) - sum (2W - 1) x g
cbps_att       sum_{W=0} exp(x g) - (sum_{W=1} x) g
=============  ==========================================================

Convergence is judged on the original moment conditions (see
:func:`moment_residual`), averaged over N (over N1 for ``cbps_att``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from covbal.data import Dataset
from covbal.errors import Infeasible, MethodMismatch, NoConvergence, Separation
from covbal.link import logistic_prob

METHODS = ("mle", "ipt_treated", "ipt_control", "cbps_ate", "cbps_att")
BALANCING_METHODS = METHODS[1:]

# |x g| beyond this means probabilities of 1e-22 or less: the iterates are
# running off to infinity along a recession direction of the potential.
_MAX_INDEX = 50.0
_ARMIJO = 1e-4
_MIN_STEP = 1e-12
_LOCAL_DECREMENT = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iter: int = 200
    line_search_shrink: float = 0.5

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class PSFit:
    method: str
    gamma: np.ndarray
    fitted: np.ndarray
    moment_residual_norm: float
    iterations: int
    tol: float = field(default=1e-9, compare=False)


def _moments(method: str, d: Dataset, eta: np.ndarray) -> np.ndarray:
    """Average-scaled moment conditions at linear index ``eta``.

    Inverse weights are taken from the index (1/p = 1 + exp(-eta) and so on),
    which is exact for the logistic link and never divides by a rounded 1 - p.
    """
    x, w = d.covariates, d.treatment
    t, c = w == 1, w == 0
    if method == "mle":
        return x.T @ (w - logistic_prob(eta)) / d.n
    if method == "ipt_treated":
        return x[t].T @ (1.0 + np.exp(-eta[t])) / d.n - x.mean(axis=0)
    if method == "ipt_control":
        return x[c].T @ (1.0 + np.exp(eta[c])) / d.n - x.mean(axis=0)
    if method == "cbps_ate":
        return (x[t].T @ (1.0 + np.exp(-eta[t])) - x[c].T @ (1.0 + np.exp(eta[c]))) / d.n
    if method == "cbps_att":
        return x[c].T @ np.exp(eta[c]) / d.n_treated - x[t].mean(axis=0)
    raise MethodMismatch(f"unknown propensity method {method!r}")


def _potential(method: str, d: Dataset):
    """Return f(g) -> (value, gradient, hessian) for ``method``, scaled by 1/N."""
    x, w = d.covariates, d.treatment
    n = d.n
    xt, xc = x[w == 1], x[w == 0]
    sum_t, sum_c = xt.sum(axis=0), xc.sum(axis=0)

    def exp_terms(rows, g, sign):
        e = np.exp(sign * (rows @ g))
        return e.sum(), sign * (rows.T @ e), (rows.T * e) @ rows

    if method == "mle":

        def f(g):
            eta = x @ g
            p = logistic_prob(eta)
            val = np.sum(np.logaddexp(0.0, eta) - w * eta)
            return val / n, x.T @ (p - w) / n, (x.T * (p * (1 - p))) @ x / n

    elif method == "ipt_treated":

        def f(g):
            v, gr, h = exp_terms(xt, g, -1.0)
            return (v + sum_c @ g) / n, (gr + sum_c) / n, h / n

    elif method == "ipt_control":

        def f(g):
            v, gr, h = exp_terms(xc, g, 1.0)
            return (v - sum_t @ g) / n, (gr - sum_t) / n, h / n

    elif method == "cbps_ate":
        lin = sum_t - sum_c

        def f(g):
            v1, g1, h1 = exp_terms(xt, g, -1.0)
            v0, g0, h0 = exp_terms(xc, g, 1.0)
            return (v1 + v0 - lin @ g) / n, (g1 + g0 - lin) / n, (h1 + h0) / n

    elif method == "cbps_att":

        def f(g):
            v, gr, h = exp_terms(xc, g, 1.0)
            return (v - sum_t @ g) / n, (gr - sum_t) / n, h / n

    else:
        raise MethodMismatch(f"unknown propensity method {method!r}")
    return f


def dual_objective(method: str, d: Dataset):
    """Convex potential whose stationary point solves ``method``'s moments.

    Returns a callable mapping a coefficient vector to ``(value, gradient,
    hessian)``; exposed so the analytic derivatives can be checked.
    """
    return _potential(method, d)


def moment_residual(fit: PSFit, d: Dataset) -> np.ndarray:
    """Re-evaluate the defining moment conditions of ``fit.method`` at ``fit.gamma``."""
    if fit.method not in METHODS:
        raise MethodMismatch(f"unknown propensity method {fit.method!r}")
    if fit.gamma.shape != (d.k,) or fit.fitted.shape != (d.n,):
        raise MethodMismatch("fit was not produced from this dataset")
    return _moments(fit.method, d, d.covariates @ fit.gamma)


def _check_separation(d: Dataset) -> None:
    # Quasi-complete or complete separation <=> some direction b != 0 with
    # (2W - 1) x b >= 0 for every unit; normalise by sum (2W - 1) x b = 1.
    a = (2.0 * d.treatment - 1.0)[:, None] * d.covariates
    res = linprog(
        np.zeros(d.k),
        A_ub=-a,
        b_ub=np.zeros(d.n),
        A_eq=a.sum(axis=0)[None, :],
        b_eq=[1.0],
        bounds=[(None, None)] * d.k,
        method="highs",
    )
    if res.status == 0:
        raise Separation(
            "treatment is (quasi-)perfectly separated by the covariates; "
            "the logit MLE does not exist",
            method="mle",
        )


def _start(d: Dataset) -> np.ndarray:
    g = np.zeros(d.k)
    g[0] = math.log(d.n_treated / d.n_control)
    return g


def _solve(method: str, d: Dataset, gamma0: np.ndarray, cfg: SolverConfig) -> PSFit:
    x = d.covariates
    potential = _potential(method, d)
    fail = Separation if method == "mle" else Infeasible
    g = np.array(gamma0, dtype=float)

    def residual(g):
        return _moments(method, d, x @ g)

    m = residual(g)
    norm = float(np.max(np.abs(m)))
    for it in range(cfg.max_iter + 1):
        if norm <= cfg.tol:
            # one extra Newton step is nearly free and buys several digits
            _, grad, hess = potential(g)
            try:
                cand = g - np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                cand = g
            m_cand = residual(cand)
            if np.max(np.abs(m_cand)) < norm:
                g, m = cand, m_cand
                norm = float(np.max(np.abs(m)))
            p = logistic_prob(x @ g)
            if np.any(p <= 0.0) or np.any(p >= 1.0):
                raise fail(
                    f"{method}: fitted probabilities reached 0 or 1",
                    method=method,
                    iterations=it,
                )
            return PSFit(method, g, p, norm, it, cfg.tol)
        if it == cfg.max_iter:
            break

        val, grad, hess = potential(g)
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise fail(
                f"{method}: singular Hessian; no units carry weight in some direction",
                method=method,
                moment_index=int(np.argmax(np.abs(m))),
                iterations=it,
            ) from None
        slope = grad @ step
        t = 1.0
        # inside the quadratic region the predicted decrease is below the
        # rounding error of the potential, so Armijo is meaningless there
        local = -slope <= _LOCAL_DECREMENT * (1.0 + abs(val))
        while not local:
            cand = g + t * step
            if np.max(np.abs(x @ cand)) <= _MAX_INDEX:
                cval = potential(cand)[0]
                if cval <= val + _ARMIJO * t * slope:
                    break
            t *= cfg.line_search_shrink
            if t < _MIN_STEP:
                cand = None
                break
        if local or cand is None:
            # full step, judged by the moment norm instead of the potential
            full = g + step
            if np.max(np.abs(x @ full)) > _MAX_INDEX:
                raise fail(
                    f"{method}: iterates diverge; the balancing system has no finite solution",
                    method=method,
                    moment_index=int(np.argmax(np.abs(m))),
                    iterations=it,
                )
            m_full = residual(full)
            if not np.max(np.abs(m_full)) < norm:
                raise NoConvergence(
                    f"{method}: line search stalled at moment max-norm {norm:.3g}",
                    method=method,
                    moment_index=int(np.argmax(np.abs(m))),
                    iterations=it,
                )
            cand = full
        g = cand
        m = residual(g)
        norm = float(np.max(np.abs(m)))

    raise NoConvergence(
        f"{method}: no convergence in {cfg.max_iter} iterations "
        f"(moment max-norm {norm:.3g})",
        method=method,
        moment_index=int(np.argmax(np.abs(m))),
        iterations=cfg.max_iter,
    )


def fit_mle(d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    """Logit maximum likelihood, started at (log(N1/N0), 0, ..., 0).

    Raises
    ------
    Separation
        If the treatment is perfectly or quasi-perfectly separated.
    """
    cfg = cfg or SolverConfig()
    _check_separation(d)
    return _solve("mle", d, _start(d), cfg)


def _fit_balancing(method: str, d: Dataset, cfg: SolverConfig | None) -> PSFit:
    cfg = cfg or SolverConfig()
    try:
        start = fit_mle(d, cfg).gamma
    except (Separation, NoConvergence):
        start = _start(d)
    return _solve(method, d, start, cfg)


def fit_ipt_treated(d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    """Tilt so that inverse-probability-weighted treated means equal the full-sample means."""
    return _fit_balancing("ipt_treated", d, cfg)


def fit_ipt_control(d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    """Tilt so that inverse-probability-weighted control means equal the full-sample means."""
    return _fit_balancing("ipt_control", d, cfg)


def fit_cbps_ate(d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    """Single coefficient vector equating weighted treated and control covariate sums."""
    return _fit_balancing("cbps_ate", d, cfg)


def fit_cbps_att(d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    """Odds-weighted control covariate means equal to the treated means."""
    return _fit_balancing("cbps_att", d, cfg)


_FITTERS = {
    "mle": fit_mle,
    "ipt_treated": fit_ipt_treated,
    "ipt_control": fit_ipt_control,
    "cbps_ate": fit_cbps_ate,
    "cbps_att": fit_cbps_att,
}


def fit(method: str, d: Dataset, cfg: SolverConfig | None = None) -> PSFit:
    try:
        fitter = _FITTERS[method]
    except KeyError:
        raise MethodMismatch(f"unknown propensity method {method!r}") from None
    return fitter(d, cfg)


def fit_pair(ps: str, d: Dataset, cfg: SolverConfig | None = None) -> tuple[PSFit, PSFit]:
    """Fits for the treated and control terms of an ATE-type estimator.

    ``ps`` is ``"ipt"`` for the two separate tilts, or a single-fit method
    name, in which case the same fit is returned twice.
    """
    if ps == "ipt":
        return fit_ipt_treated(d, cfg), fit_ipt_control(d, cfg)
    if ps == "cbps":
        ps = "cbps_ate"
    f = fit(ps, d, cfg)
    return f, f
