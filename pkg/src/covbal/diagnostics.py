"""Balance tables, weight-sum identities, and the cross-estimator equivalence audit."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from covbal.data import Dataset
from covbal.estimators import (
    ESTIMATORS,
    ate_weights,
    att_weights,
    estimate,
    fit_for,
    instrument_views,
    ps_tag,
    resolve_ps_method,
)
from covbal.propensity import PSFit, SolverConfig

AUDIT_RTOL = 1e-8


@dataclass(frozen=True)
class BalanceRow:
    name: str
    treated_mean: float
    control_mean: float
    weighted_treated_mean: float
    weighted_control_mean: float
    target_mean: float


@dataclass(frozen=True)
class BalanceReport:
    """Covariate balance under one weighting.

    Weighted means in ``rows`` are normalized by the realized weight sums.
    ``balance_residuals`` compare the unnormalized weighted covariate
    averages with their target; ``identity_residuals`` only list the exact
    identities the fitting method guarantees.
    """

    target: str
    rows: list[BalanceRow]
    weight_sums: dict
    balance_residuals: dict
    identity_residuals: dict


@dataclass(frozen=True)
class AuditReport:
    estimand: str
    ps_method: str
    estimates: dict
    max_pairwise_gap: float
    expected_equivalent: bool
    tolerance: float = field(default=0.0)

    @property
    def passed(self) -> bool | None:
        """Whether the expected exact equality holds; ``None`` when none is predicted."""
        if not self.expected_equivalent:
            return None
        return self.max_pairwise_gap <= self.tolerance


def _maxabs(v) -> float:
    return float(np.max(np.abs(v)))


def balance_report(
    d: Dataset, fit1: PSFit, fit0: PSFit | None = None, estimand: str | None = None
) -> BalanceReport:
    """Balance of ``d`` under the weights implied by the fits.

    ``estimand`` defaults to ``"att"`` for a ``cbps_att`` fit and ``"ate"``
    otherwise. For the ATT, treated units keep unit weight, controls get odds
    weights, and the target is the treated covariate mean.
    """
    fit0 = fit1 if fit0 is None else fit0
    if estimand is None:
        estimand = "att" if fit1.method == "cbps_att" else "ate"
    x, w = d.covariates, d.treatment
    treated = w == 1
    n, n1 = d.n, d.n_treated
    identities = {}

    if estimand == "att":
        w1 = treated.astype(float)
        w0 = att_weights(d, fit1)
        target, target_name = x[treated].mean(axis=0), "treated"
        bal0 = x.T @ w0 / n1 - target
        balance = {"control": _maxabs(bal0)}
        expected = {"treated": float(n1), "control": None}
        if fit1.method == "cbps_att":
            identities["treated_count"] = abs(float(w0.sum()) - n1)
            identities["att_balance"] = _maxabs(bal0)
            expected["control"] = float(n1)
    else:
        w1, w0 = ate_weights(d, fit1, fit0)
        target, target_name = x.mean(axis=0), "all"
        bal1 = x.T @ w1 / n - target
        bal0 = x.T @ w0 / n - target
        balance = {"treated": _maxabs(bal1), "control": _maxabs(bal0)}
        expected = {"treated": None, "control": None}
        if fit1.method == "ipt_treated":
            identities["treated_weight_sum"] = abs(float(w1.sum()) - n)
            identities["treated_balance"] = _maxabs(bal1)
            expected["treated"] = float(n)
        if fit0.method == "ipt_control":
            identities["control_weight_sum"] = abs(float(w0.sum()) - n)
            identities["control_balance"] = _maxabs(bal0)
            expected["control"] = float(n)
        if fit1.method == fit0.method == "cbps_ate":
            identities["weight_sum_equality"] = abs(float(w1.sum() - w0.sum()))
            identities["cbps_balance"] = _maxabs(x.T @ (w1 - w0) / n)

    if fit1.method == "mle":
        identities["mle_score"] = _maxabs(x.T @ (w - fit1.fitted) / n)

    rows = []
    for j in range(1, d.k):
        col = x[:, j]
        rows.append(
            BalanceRow(
                name=d.names[j],
                treated_mean=float(col[treated].mean()),
                control_mean=float(col[~treated].mean()),
                weighted_treated_mean=float(w1 @ col / w1.sum()),
                weighted_control_mean=float(w0 @ col / w0.sum()),
                target_mean=float(target[j]),
            )
        )
    sums = {
        "treated": float(w1.sum()),
        "control": float(w0.sum()),
        "expected_treated": expected["treated"],
        "expected_control": expected["control"],
    }
    return BalanceReport(target_name, rows, sums, balance, identities)


def expected_equivalent(estimand: str, ps_method: str) -> bool:
    if estimand in ("ate", "late"):
        return ps_method == "ipt"
    return ps_method == "cbps_att"


def audit_from_fits(
    d: Dataset, estimand: str, fit1: PSFit, fit0: PSFit | None = None
) -> AuditReport:
    fit0 = fit1 if fit0 is None else fit0
    ests = {e: estimate(d, estimand, e, fit1, fit0) for e in ESTIMATORS}
    values = {e: r.value for e, r in ests.items()}
    gap = max(abs(a - b) for a, b in combinations(values.values(), 2))
    tag = ps_tag(fit1, fit0)
    tol = AUDIT_RTOL * (1.0 + max(abs(v) for v in values.values()))
    return AuditReport(
        estimand=estimand,
        ps_method=tag,
        estimates=values,
        max_pairwise_gap=gap,
        expected_equivalent=expected_equivalent(estimand, tag),
        tolerance=tol,
    )


def equivalence_audit(
    d: Dataset, estimand: str, ps_method: str, cfg: SolverConfig | None = None
) -> AuditReport:
    """Run all five estimators under one weighting and compare them.

    For (ate, ipt), (att, cbps_att) and their instrumented analogues the
    estimates must coincide; :attr:`AuditReport.passed` reports whether
    they do to within ``1e-8 * (1 + max |estimate|)``.
    """
    resolve_ps_method(estimand, ps_method)
    fit1, fit0 = fit_for(d, estimand, ps_method, cfg)
    return audit_from_fits(d, estimand, fit1, fit0)


def instrument_balance(d: Dataset, fit1: PSFit, fit0: PSFit | None = None, estimand=None):
    """Balance report for fits estimated with the instrument as treatment."""
    return balance_report(instrument_views(d)[0], fit1, fit0, estimand)
