"""Balancing propensity scores and the weighting estimators that use them."""

from covbal.data import Dataset, build_dataset, mean_covariates
from covbal.diagnostics import balance_report, equivalence_audit
from covbal.errors import CovbalError, InputError, SolverError
from covbal.estimators import ate, att_components, estimate, late, latt
from covbal.propensity import PSFit, SolverConfig, fit, fit_pair
from covbal.regression import fit_ols, fit_wls

__all__ = [
    "Dataset",
    "build_dataset",
    "mean_covariates",
    "balance_report",
    "equivalence_audit",
    "CovbalError",
    "InputError",
    "SolverError",
    "ate",
    "att_components",
    "estimate",
    "late",
    "latt",
    "PSFit",
    "SolverConfig",
    "fit",
    "fit_pair",
    "fit_ols",
    "fit_wls",
]
__version__ = "0.1.0"
