"""Logistic link used for both the treatment and instrument propensity scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinkEval:
    prob: np.ndarray | float
    dprob: np.ndarray | float


def logistic(index) -> LinkEval:
    """Evaluate exp(z) / (1 + exp(z)) and its derivative without overflow.

    Accepts a scalar or an array; scalars come back as floats.
    """
    z = np.asarray(index, dtype=float)
    t = np.exp(-np.abs(z))
    denom = 1.0 + t
    prob = np.where(z >= 0, 1.0 / denom, t / denom)
    dprob = t / (denom * denom)
    if z.ndim == 0:
        return LinkEval(float(prob), float(dprob))
    return LinkEval(prob, dprob)


def logistic_prob(index) -> np.ndarray:
    return logistic(index).prob
