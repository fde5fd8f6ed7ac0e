"""Linear outcome models on a treatment arm: OLS and weighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from covbal.data import Dataset
from covbal.errors import InputError, NegativeWeight, RankDeficientSubgroup

SUBGROUPS = ("treated", "control")
WEIGHTINGS = ("unweighted", "inverse_ps", "inverse_one_minus_ps", "odds")
_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class CoefVector:
    beta: np.ndarray
    subgroup: str
    weighting: str
    n_used: int


def _subgroup_mask(d: Dataset, subgroup: str) -> np.ndarray:
    if subgroup not in SUBGROUPS:
        raise InputError(f"subgroup must be one of {SUBGROUPS}, got {subgroup!r}")
    return d.treatment == (1 if subgroup == "treated" else 0)


def _lstsq(x: np.ndarray, y: np.ndarray, sqrt_w: np.ndarray) -> np.ndarray:
    xs = x * sqrt_w[:, None]
    beta, _, rank, _ = np.linalg.lstsq(xs, y * sqrt_w, rcond=_RCOND)
    if rank < x.shape[1]:
        raise RankDeficientSubgroup(
            f"weighted design has rank {rank} < {x.shape[1]}; "
            "subgroup too small or collinear"
        )
    return beta


def fit_ols(d: Dataset, subgroup: str) -> CoefVector:
    """Regress Y on X using only the units of one arm."""
    m = _subgroup_mask(d, subgroup)
    beta = _lstsq(d.covariates[m], d.outcome[m], np.ones(int(m.sum())))
    return CoefVector(beta, subgroup, "unweighted", int(m.sum()))


def fit_wls(
    d: Dataset, subgroup: str, unit_weights, weighting: str = "inverse_ps"
) -> CoefVector:
    """Weighted least squares over one arm.

    ``unit_weights`` has one entry per unit in ``d``; entries outside the
    subgroup must be zero. Rows are scaled by the square roots of the weights
    and solved with an SVD-based least-squares routine, so X'WX is never
    formed.
    """
    if weighting not in WEIGHTINGS:
        raise InputError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    w = np.asarray(unit_weights, dtype=float)
    if w.shape != (d.n,):
        raise InputError("unit_weights must have one entry per unit")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise NegativeWeight("unit weights must be finite and nonnegative")
    m = _subgroup_mask(d, subgroup)
    if np.any(w[~m] != 0):
        raise InputError(f"weights must be zero outside the {subgroup} subgroup")
    used = m & (w > 0)
    beta = _lstsq(d.covariates[used], d.outcome[used], np.sqrt(w[used]))
    return CoefVector(beta, subgroup, weighting, int(used.sum()))


def weighted_foc(d: Dataset, coef: CoefVector, unit_weights=None) -> np.ndarray:
    """N^-1 sum w_i x_i (y_i - x_i b), the least-squares first-order conditions.

    With ``unit_weights`` omitted, the OLS indicator weights of ``coef.subgroup``
    are used.
    """
    if unit_weights is None:
        unit_weights = _subgroup_mask(d, coef.subgroup).astype(float)
    w = np.asarray(unit_weights, dtype=float)
    resid = d.outcome - d.covariates @ coef.beta
    return d.covariates.T @ (w * resid) / d.n
