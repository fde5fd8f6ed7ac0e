"""Reproducible synthetic datasets.

Random numbers come from a counter-based SplitMix64 stream so that the
fixtures can be regenerated bit-for-bit in any language:

    z  = key + i * 0x9E3779B97F4A7C15          (mod 2**64, i = 1, 2, ...)
    z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z  =  z ^ (z >> 31)
    u  = (z >> 11) * 2**-53                   in [0, 1)

with ``key = seed``. Draws are consumed in this order for every attempt:

1. covariates, N*k uniforms row-major, mapped to 2u - 1;
2. N uniforms for the treatment (or the instrument when instrumented):
   unit i is 1 iff u_i < logistic(index_i);
3. when instrumented, N uniforms for the treatment given Z and X;
4. 2N uniforms for Box-Muller normals, e_i = sqrt(-2 log(1 - a_i)) cos(2 pi b_i)
   with (a_i, b_i) consecutive pairs.

Y = X beta_1 + sd * e for treated units and X beta_0 + sd * e for controls.
If a draw violates a dataset invariant the stream simply continues with the
next attempt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from covbal.data import Dataset, build_dataset
from covbal.errors import DegenerateDraw, DegenerateTreatment, InputError, RankDeficient
from covbal.link import logistic_prob

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
MAX_ATTEMPTS = 100
# propensities stay inside (0.02, 0.98) when |index| stays below this
INDEX_BOUND = 0.999 * math.log(0.98 / 0.02)


class SplitMix64:
    def __init__(self, seed: int):
        self.key = np.uint64(seed % 2**64)
        self.counter = 0

    def bits(self, size: int) -> np.ndarray:
        i = np.arange(self.counter + 1, self.counter + size + 1, dtype=np.uint64)
        self.counter += size
        z = self.key + i * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))

    def uniform(self, size: int) -> np.ndarray:
        return (self.bits(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, size: int) -> np.ndarray:
        u = self.uniform(2 * size).reshape(size, 2)
        return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * math.pi * u[:, 1])


def bound_coefs(coefs) -> np.ndarray:
    """Shrink a logit index so that |index| < INDEX_BOUND on [-1, 1]^k."""
    c = np.asarray(coefs, dtype=float)
    total = np.abs(c).sum()
    return c if total <= INDEX_BOUND else c * (INDEX_BOUND / total)


@dataclass(frozen=True)
class DGPSpec:
    """Parameters of a synthetic design.

    ``treatment_coefs`` indexes W, or Z when ``instrumented``. In that case
    ``compliance_coefs`` has K + 1 entries: the coefficient on Z followed by
    the K coefficients on X (intercept first) of the logit index for W.
    """

    seed: int
    n: int
    k_continuous: int
    treatment_coefs: Sequence[float]
    outcome_coefs_treated: Sequence[float]
    outcome_coefs_control: Sequence[float]
    noise_sd: float = 1.0
    instrumented: bool = False
    compliance_coefs: Optional[Sequence[float]] = None

    def __post_init__(self):
        k = self.k_continuous + 1
        for name in ("treatment_coefs", "outcome_coefs_treated", "outcome_coefs_control"):
            if len(getattr(self, name)) != k:
                raise InputError(f"{name} must have {k} entries")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be nonnegative")
        if self.n < 2:
            raise InputError("n must be at least 2")
        if self.instrumented and (
            self.compliance_coefs is None or len(self.compliance_coefs) != k + 1
        ):
            raise InputError(f"compliance_coefs must have {k + 1} entries")


def generate(spec: DGPSpec) -> Dataset:
    rng = SplitMix64(spec.seed)
    n, k = spec.n, spec.k_continuous
    g = bound_coefs(spec.treatment_coefs)
    c = None if spec.compliance_coefs is None else bound_coefs(spec.compliance_coefs)
    b1 = np.asarray(spec.outcome_coefs_treated, dtype=float)
    b0 = np.asarray(spec.outcome_coefs_control, dtype=float)
    names = tuple(f"x{j}" for j in range(1, k + 1))
    for _ in range(MAX_ATTEMPTS):
        raw = 2.0 * rng.uniform(n * k).reshape(n, k) - 1.0
        x = np.column_stack([np.ones(n), raw])
        first = (rng.uniform(n) < logistic_prob(x @ g)).astype(np.int64)
        if spec.instrumented:
            z = first
            w = (rng.uniform(n) < logistic_prob(c[0] * z + x @ c[1:])).astype(np.int64)
        else:
            z, w = None, first
        e = rng.normal(n)
        y = np.where(w == 1, x @ b1, x @ b0) + spec.noise_sd * e
        try:
            return build_dataset(raw, w, y, instrument=z, names=names)
        except (DegenerateTreatment, RankDeficient):
            continue
    raise DegenerateDraw(f"no valid dataset after {MAX_ATTEMPTS} attempts (seed {spec.seed})")


S1 = DGPSpec(
    seed=1,
    n=200,
    k_continuous=3,
    treatment_coefs=(0.0, 1.5, -1.2, 1.0),
    outcome_coefs_treated=(2.0, 1.5, -1.0, 0.8),
    outcome_coefs_control=(0.5, 1.0, 0.5, -0.5),
    noise_sd=1.0,
)

S2 = DGPSpec(
    seed=2,
    n=400,
    k_continuous=3,
    treatment_coefs=(0.1, 0.6, -0.5, 0.4),
    outcome_coefs_treated=(2.0, 1.5, -1.0, 0.8),
    outcome_coefs_control=(0.5, 1.0, 0.5, -0.5),
    noise_sd=1.0,
    instrumented=True,
    compliance_coefs=(2.5, -1.2, 0.5, 0.3, -0.2),
)

SAMPLE_SIZES = (50, 100, 200, 500)


def family_spec(seed: int, instrumented: bool = False) -> DGPSpec:
    """Spec of the ``seed``-th member of the test family.

    N cycles through 50, 100, 200, 500 and the number of columns K (with the
    intercept) through 2..6. Coefficients are drawn from a second SplitMix64
    stream keyed by ``seed + 2**32``.
    """
    n = SAMPLE_SIZES[(seed - 1) % 4]
    k = 1 + (seed - 1) % 5
    coef_rng = SplitMix64(seed + 2**32)
    draw = lambda size, scale: scale * (2.0 * coef_rng.uniform(size) - 1.0)  # noqa: E731
    treat = draw(k + 1, 0.5)
    beta1 = draw(k + 1, 2.0)
    beta0 = draw(k + 1, 2.0)
    comp = None
    if instrumented:
        comp = np.concatenate([[2.5], draw(k + 1, 0.5)])
    return DGPSpec(
        seed=seed,
        n=n,
        k_continuous=k,
        treatment_coefs=tuple(treat),
        outcome_coefs_treated=tuple(beta1),
        outcome_coefs_control=tuple(beta0),
        noise_sd=1.0,
        instrumented=instrumented,
        compliance_coefs=None if comp is None else tuple(comp),
    )
