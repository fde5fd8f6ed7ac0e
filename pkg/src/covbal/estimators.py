"""Weighting, augmented weighting, and weighted regression-adjustment estimators.

ATE estimators take two propensity fits: ``fit1`` supplies the scores that
weight the treated units, ``fit0`` the scores that weight the controls.
Single-fit methods pass the same fit twice; inverse probability tilting
passes its treated and control tilts.

Normalized ("n"-prefixed) variants divide each weighted sum by its realized
weight sum instead of by N (or N1). For augmented estimators only the
weighted residual average is normalized; the average of fitted values over
the target population is left as is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from covbal.data import Dataset
from covbal.errors import DenominatorNearZero, FittedProbabilityOutOfRange, InputError
from covbal.propensity import PSFit, SolverConfig, fit as fit_ps, fit_pair
from covbal.regression import CoefVector, fit_ols, fit_wls

ESTIMATORS = ("ipw", "nipw", "aipw", "naipw", "ipwra")
ESTIMANDS = ("ate", "att", "late", "latt")
DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class EffectEstimate:
    estimand: str
    estimator: str
    ps_method: str
    value: float
    mu1: float
    mu0: float


def ps_tag(fit1: PSFit, fit0: PSFit) -> str:
    if fit1.method == fit0.method:
        return fit1.method
    if (fit1.method, fit0.method) == ("ipt_treated", "ipt_control"):
        return "ipt"
    return f"{fit1.method}/{fit0.method}"


def _check_estimator(estimator: str) -> None:
    if estimator not in ESTIMATORS:
        raise InputError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")


def _beta(b) -> np.ndarray:
    return np.asarray(b.beta if isinstance(b, CoefVector) else b, dtype=float)


def ate_weights(d: Dataset, fit1: PSFit, fit0: PSFit) -> tuple[np.ndarray, np.ndarray]:
    """Unit weights W/p (from ``fit1``) and (1 - W)/(1 - p) (from ``fit0``)."""
    treated = d.treatment == 1
    p1, p0 = fit1.fitted, fit0.fitted
    if p1.shape != (d.n,) or p0.shape != (d.n,):
        raise InputError("propensity fits do not match the dataset")
    if np.any(p1[treated] <= 0.0):
        raise FittedProbabilityOutOfRange("a treated unit has fitted probability 0")
    if np.any(p0[~treated] >= 1.0):
        raise FittedProbabilityOutOfRange("a control unit has fitted probability 1")
    w1 = np.zeros(d.n)
    w0 = np.zeros(d.n)
    w1[treated] = 1.0 / p1[treated]
    w0[~treated] = 1.0 / (1.0 - p0[~treated])
    return w1, w0


def att_weights(d: Dataset, fit: PSFit) -> np.ndarray:
    """Odds weights p/(1 - p) on control units, zero on treated units."""
    control = d.treatment == 0
    p = fit.fitted
    if p.shape != (d.n,):
        raise InputError("propensity fit does not match the dataset")
    if np.any(p[control] >= 1.0):
        raise FittedProbabilityOutOfRange("a control unit has fitted probability 1")
    w = np.zeros(d.n)
    w[control] = p[control] / (1.0 - p[control])
    return w


def _weighted_mean(w, v, normalize: bool, n: float) -> float:
    return float(w @ v / (w.sum() if normalize else n))


def ipw_ate(d: Dataset, fit1: PSFit, fit0: PSFit, normalize: bool = False) -> EffectEstimate:
    w1, w0 = ate_weights(d, fit1, fit0)
    mu1 = _weighted_mean(w1, d.outcome, normalize, d.n)
    mu0 = _weighted_mean(w0, d.outcome, normalize, d.n)
    return EffectEstimate(
        "ate", "nipw" if normalize else "ipw", ps_tag(fit1, fit0), mu1 - mu0, mu1, mu0
    )


def aipw_ate(
    d: Dataset, fit1: PSFit, fit0: PSFit, beta1, beta0, normalize: bool = False
) -> EffectEstimate:
    """Weighted residual average plus the full-sample mean of fitted values, per arm.

    ``beta1`` and ``beta0`` may be :class:`CoefVector` instances or plain
    length-K vectors.
    """
    w1, w0 = ate_weights(d, fit1, fit0)
    x, y = d.covariates, d.outcome
    b1, b0 = _beta(beta1), _beta(beta0)
    mu1 = _weighted_mean(w1, y - x @ b1, normalize, d.n) + float(np.mean(x @ b1))
    mu0 = _weighted_mean(w0, y - x @ b0, normalize, d.n) + float(np.mean(x @ b0))
    return EffectEstimate(
        "ate", "naipw" if normalize else "aipw", ps_tag(fit1, fit0), mu1 - mu0, mu1, mu0
    )


def ipwra_betas(d: Dataset, fit1: PSFit, fit0: PSFit) -> tuple[CoefVector, CoefVector]:
    w1, w0 = ate_weights(d, fit1, fit0)
    return (
        fit_wls(d, "treated", w1, "inverse_ps"),
        fit_wls(d, "control", w0, "inverse_one_minus_ps"),
    )


def ipwra_ate(d: Dataset, fit1: PSFit, fit0: PSFit) -> EffectEstimate:
    b1, b0 = ipwra_betas(d, fit1, fit0)
    xbar = d.covariates.mean(axis=0)
    mu1, mu0 = float(xbar @ b1.beta), float(xbar @ b0.beta)
    return EffectEstimate("ate", "ipwra", ps_tag(fit1, fit0), mu1 - mu0, mu1, mu0)


def ate(d: Dataset, fit1: PSFit, fit0: PSFit, estimator: str, beta1=None, beta0=None):
    """Dispatch to one ATE estimator; augmented ones default to per-arm OLS."""
    _check_estimator(estimator)
    if estimator in ("ipw", "nipw"):
        return ipw_ate(d, fit1, fit0, normalize=estimator == "nipw")
    if estimator in ("aipw", "naipw"):
        if beta1 is None:
            beta1 = fit_ols(d, "treated")
        if beta0 is None:
            beta0 = fit_ols(d, "control")
        return aipw_ate(d, fit1, fit0, beta1, beta0, normalize=estimator == "naipw")
    return ipwra_ate(d, fit1, fit0)


def att_components(
    d: Dataset, fit: PSFit, estimator: str, beta0=None
) -> EffectEstimate:
    """ATT as treated-sample mean minus an odds-weighted control mean.

    ``beta0`` is only used by ``aipw``/``naipw`` and defaults to the control OLS fit.
    """
    _check_estimator(estimator)
    treated = d.treatment == 1
    n1 = d.n_treated
    x, y = d.covariates, d.outcome
    odds = att_weights(d, fit)
    mu1 = float(y[treated].mean())
    xbar1 = x[treated].mean(axis=0)
    normalize = estimator in ("nipw", "naipw")
    if estimator in ("ipw", "nipw"):
        mu0 = _weighted_mean(odds, y, normalize, n1)
    elif estimator in ("aipw", "naipw"):
        b0 = _beta(fit_ols(d, "control") if beta0 is None else beta0)
        mu0 = _weighted_mean(odds, y - x @ b0, normalize, n1) + float(xbar1 @ b0)
    else:
        b0 = fit_wls(d, "control", odds, "odds")
        mu0 = float(xbar1 @ b0.beta)
    return EffectEstimate("att", estimator, fit.method, mu1 - mu0, mu1, mu0)


def _ratio(estimand, estimator, tag, num: float, den: float) -> EffectEstimate:
    if abs(den) <= DENOMINATOR_FLOOR:
        raise DenominatorNearZero(
            f"{estimand} denominator {den:.3g} is within {DENOMINATOR_FLOOR:g} of zero"
        )
    return EffectEstimate(estimand, estimator, tag, num / den, num, den)


def instrument_views(d: Dataset) -> tuple[Dataset, Dataset]:
    """Datasets with Z as treatment and, respectively, Y and W as outcome."""
    if d.instrument is None:
        raise InputError("this estimand needs an instrument")
    return (
        d.with_treatment(d.instrument),
        d.with_treatment(d.instrument, outcome=d.treatment.astype(float)),
    )


def late(
    d: Dataset,
    ps_method: str,
    estimator: str,
    cfg: SolverConfig | None = None,
    fits: tuple[PSFit, PSFit] | None = None,
) -> EffectEstimate:
    """Ratio of the ATE of Z on Y to the ATE of Z on W.

    One pair of instrument propensity fits serves both numerator and
    denominator; pass ``fits`` to reuse a pair already estimated on Z.
    """
    _check_estimator(estimator)
    dy, dw = instrument_views(d)
    f1, f0 = fits if fits is not None else fit_pair(ps_method, dy, cfg)
    num = ate(dy, f1, f0, estimator)
    den = ate(dw, f1, f0, estimator)
    return _ratio("late", estimator, ps_tag(f1, f0), num.value, den.value)


def latt(
    d: Dataset,
    estimator: str,
    cfg: SolverConfig | None = None,
    ps_method: str = "cbps_att",
    fit: PSFit | None = None,
) -> EffectEstimate:
    """Ratio of two ATT estimates with Z as the treatment, outcomes Y and W."""
    _check_estimator(estimator)
    dy, dw = instrument_views(d)
    f = fit if fit is not None else fit_ps(ps_method, dy, cfg)
    num = att_components(dy, f, estimator)
    den = att_components(dw, f, estimator)
    return _ratio("latt", estimator, f.method, num.value, den.value)


def resolve_ps_method(estimand: str, ps: str) -> str:
    """Canonical propensity method for an estimand.

    ``"cbps"`` means the ATE balancing system for ate/late and the ATT one for
    att/latt. ``"ipt"`` (a pair of tilts) only makes sense for ate/late.
    """
    if estimand not in ESTIMANDS:
        raise InputError(f"estimand must be one of {ESTIMANDS}, got {estimand!r}")
    ate_like = estimand in ("ate", "late")
    if ps == "cbps":
        return "cbps_ate" if ate_like else "cbps_att"
    if ps == "ipt":
        if not ate_like:
            raise InputError("ps 'ipt' is only available for the ate and late estimands")
        return ps
    if ps in ("mle", "cbps_ate", "cbps_att"):
        return ps
    raise InputError(f"unknown propensity method {ps!r}")


def fit_for(
    d: Dataset, estimand: str, ps: str, cfg: SolverConfig | None = None
) -> tuple[PSFit, PSFit]:
    """Propensity fits for an estimand: on W for ate/att, on Z for late/latt.

    Returns a (treated-term, control-term) pair; single-fit methods repeat
    the same fit.
    """
    method = resolve_ps_method(estimand, ps)
    target = d if estimand in ("ate", "att") else instrument_views(d)[0]
    return fit_pair(method, target, cfg)


def estimate(
    d: Dataset, estimand: str, estimator: str, fit1: PSFit, fit0: PSFit | None = None
) -> EffectEstimate:
    """One estimator for one estimand, given fits from :func:`fit_for`."""
    fit0 = fit1 if fit0 is None else fit0
    if estimand == "ate":
        return ate(d, fit1, fit0, estimator)
    if estimand == "att":
        return att_components(d, fit1, estimator)
    if estimand == "late":
        return late(d, ps_tag(fit1, fit0), estimator, fits=(fit1, fit0))
    if estimand == "latt":
        return latt(d, estimator, fit=fit1)
    raise InputError(f"estimand must be one of {ESTIMANDS}, got {estimand!r}")
