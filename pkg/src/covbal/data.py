"""Validated in-memory dataset consumed by every estimator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from covbal.errors import (
    DegenerateTreatment,
    EmptyPopulation,
    InputError,
    LengthMismatch,
    RankDeficient,
)

RANK_RTOL = 1e-10
POPULATIONS = ("all", "treated", "control", "z1", "z0")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix (intercept first), binary treatment, outcome, optional instrument.

    Instances are built by :func:`build_dataset`; the arrays are read-only.
    """

    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    instrument: Optional[np.ndarray] = None
    names: tuple = ()

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def k(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.treatment.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    def mask(self, population: str) -> np.ndarray:
        if population == "all":
            return np.ones(self.n, dtype=bool)
        if population == "treated":
            return self.treatment == 1
        if population == "control":
            return self.treatment == 0
        if population in ("z1", "z0"):
            if self.instrument is None:
                raise EmptyPopulation(f"population {population!r} needs an instrument")
            return self.instrument == (1 if population == "z1" else 0)
        raise InputError(f"unknown population {population!r}; expected one of {POPULATIONS}")

    def with_treatment(self, treatment, outcome=None) -> "Dataset":
        """Re-validated copy with a different treatment (and optionally outcome).

        The instrument is dropped; this is how ratio estimators let the
        instrument play the role of the treatment.
        """
        out = self.outcome if outcome is None else outcome
        return _assemble(self.covariates, treatment, out, None, self.names)


@dataclass(frozen=True)
class MeanVector:
    values: np.ndarray
    population: str


def _as_binary(v, name: str) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional")
    as_float = arr.astype(float)
    if not np.all((as_float == 0.0) | (as_float == 1.0)):
        raise InputError(f"{name} entries must be 0 or 1")
    return as_float.astype(np.int64)


def _assemble(covariates, treatment, outcome, instrument, names) -> Dataset:
    x = np.ascontiguousarray(covariates, dtype=float)
    n = x.shape[0]
    w = _as_binary(treatment, "treatment")
    y = np.asarray(outcome, dtype=float)
    if y.ndim != 1:
        raise InputError("outcome must be one-dimensional")
    z = None if instrument is None else _as_binary(instrument, "instrument")
    lengths = {len(w), len(y), n} | ({len(z)} if z is not None else set())
    if len(lengths) != 1:
        raise LengthMismatch(f"inputs have differing lengths {sorted(lengths)}")
    if n < 2:
        raise InputError("need at least two units")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InputError("covariates and outcome must be finite")
    if not np.all(x[:, 0] == 1.0):
        raise RankDeficient("first covariate column must be the intercept")

    n1 = int(w.sum())
    if n1 == 0 or n1 == n:
        raise DegenerateTreatment(f"need both treated and control units (N1={n1}, N={n})")
    if z is not None and z.sum() in (0, n):
        raise DegenerateTreatment("both instrument groups must be nonempty")

    sv = np.linalg.svd(x, compute_uv=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0]))
    if rank < x.shape[1]:
        raise RankDeficient(
            f"covariate matrix has rank {rank} < {x.shape[1]} columns "
            "(collinear or constant covariate)"
        )

    if not names:
        names = ("intercept",) + tuple(f"x{j}" for j in range(1, x.shape[1]))
    return Dataset(
        covariates=_readonly(x),
        treatment=_readonly(w),
        outcome=_readonly(y.copy()),
        instrument=None if z is None else _readonly(z),
        names=tuple(names),
    )


def build_dataset(
    raw_covariates,
    treatment,
    outcome,
    instrument=None,
    names: Sequence[str] = (),
) -> Dataset:
    """Prepend an intercept to ``raw_covariates`` and validate everything.

    Parameters
    ----------
    raw_covariates : array_like, shape (N,) or (N, K-1)
        Covariates without a constant column. A 1-d input is one covariate.
    treatment, instrument : array_like of {0, 1}
    outcome : array_like of float
    names : sequence of str, optional
        Labels for the raw covariate columns.

    Raises
    ------
    LengthMismatch, DegenerateTreatment, RankDeficient
    """
    raw = np.asarray(raw_covariates, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.ndim != 2:
        raise InputError("raw_covariates must be a vector or a matrix")
    x = np.column_stack([np.ones(raw.shape[0]), raw])
    full_names = ("intercept",) + tuple(names) if names else ()
    if full_names and len(full_names) != x.shape[1]:
        raise LengthMismatch("names must have one entry per raw covariate column")
    return _assemble(x, treatment, outcome, instrument, full_names)


def mean_covariates(d: Dataset, population: str = "all") -> MeanVector:
    m = d.mask(population)
    if not m.any():
        raise EmptyPopulation(f"population {population!r} is empty")
    return MeanVector(values=d.covariates[m].mean(axis=0), population=population)
