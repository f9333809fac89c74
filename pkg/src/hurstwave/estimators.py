"""Standard spectrum regression, ALPHEE and NC-ALPHEE pairwise Hurst estimators.

Pair estimates for levels j1 < j2 are computed in natural logs.  For
NC-ALPHEE the level energy is bias-corrected as
``A = n * mean_sq - 2 * sigma_eps^2 * exp(psi(n / 2))``; with zero noise
variance this reduces exactly to the ALPHEE estimator and its variance.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DomainError, InsufficientDataError, ShapeError
from .special import digamma, trigamma

METHODS = ("standard", "alphee", "nc_alphee")

REASONS = {
    _kernels.DEGENERATE: "degenerate level (zero energy)",
    _kernels.INSUFFICIENT_DOF: "insufficient dof",
    _kernels.NOISE_DOMINATES: "noise dominates level",
}


def canonical_method(method):
    m = method.lower().replace("-", "_")
    if m not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    return m


@dataclass(frozen=True)
class NoiseEstimate:
    sigma_eps_sq: float
    source_level: int | None = None

    def __post_init__(self):
        if not self.sigma_eps_sq >= 0:
            raise DomainError(f"noise variance must be nonnegative, got {self.sigma_eps_sq!r}")


@dataclass(frozen=True)
class SpectrumFit:
    beta0: float
    beta1: float
    h_hat: float
    levels: tuple


@dataclass(frozen=True)
class PairEstimate:
    j1: int
    j2: int
    h_hat: float | None
    variance: float | None
    valid: bool
    invalid_reason: str | None = None

    @property
    def pair(self):
        return (self.j1, self.j2)


def estimate_noise_variance(decomp):
    """Sample variance (divisor n - 1) of the finest-level detail coefficients."""
    finest = decomp.j_max
    d = decomp.details.get(finest)
    if d is None or d.shape[0] < 2:
        raise ShapeError("finest detail level missing or shorter than two coefficients")
    return NoiseEstimate(float(np.var(d, ddof=1)), finest)


def spectrum_regression(energies, j_min=None, j_max=None):
    """OLS of S(j) on j; S(j) = beta0 - j * beta1 and H = (beta1 - 1) / 2."""
    sel = [
        e for e in energies
        if (j_min is None or e.level >= j_min) and (j_max is None or e.level <= j_max)
    ]
    usable = [e for e in sel if not e.degenerate]
    if len(usable) < 3:
        raise InsufficientDataError(f"spectrum regression needs 3 usable levels, got {len(usable)}")
    j = np.array([e.level for e in usable], dtype=np.float64)
    s = np.array([e.log2_energy for e in usable])
    jc = j - j.mean()
    slope = float(np.dot(jc, s - s.mean()) / np.dot(jc, jc))
    beta1 = -slope
    beta0 = float(s.mean() + beta1 * j.mean())
    return SpectrumFit(beta0, beta1, (beta1 - 1.0) / 2.0, (int(j.min()), int(j.max())))


@lru_cache(maxsize=128)
def level_terms(level):
    """(psi(n/2), psi'(n/2)) for n = 2**level."""
    half = 2.0 ** level / 2.0
    return digamma(half), trigamma(half)


def _terms(levels):
    t = np.array([level_terms(int(j)) for j in levels]).reshape(-1, 2)
    return t[:, 0], t[:, 1]


def pair_arrays(levels, mean_sq, method, sigma_eps_sq=0.0):
    """Vectorized pair estimates over ``levels`` (lexicographic pairs).

    Returns ``(h_hat, variance, code)`` arrays; see ``REASONS`` for codes.
    """
    levels = np.asarray(levels, dtype=np.int64)
    psi, trig = _terms(levels)
    nc = canonical_method(method) == "nc_alphee"
    return _kernels.pair_table(levels, mean_sq, psi, trig, float(sigma_eps_sq) if nc else 0.0, nc)


def pair_ids(j_min, j_max):
    return [(a, b) for a in range(j_min, j_max + 1) for b in range(a + 1, j_max + 1)]


def pair_count(j_min, j_max):
    k = j_max - j_min + 1
    return k * (k - 1) // 2


def _single(e1, e2, method, sigma2):
    if e1.level >= e2.level:
        raise DomainError(f"pair levels must satisfy j1 < j2, got ({e1.level}, {e2.level})")
    h, v, c = pair_arrays([e1.level, e2.level], [e1.mean_sq, e2.mean_sq], method, sigma2)
    return _to_estimate(e1.level, e2.level, h[0], v[0], c[0])


def _to_estimate(j1, j2, h, v, c):
    if c == _kernels.VALID:
        return PairEstimate(j1, j2, float(h), float(v), True)
    return PairEstimate(j1, j2, None, None, False, REASONS[int(c)])


def alphee_pair(e1, e2):
    return _single(e1, e2, "alphee", 0.0)


def nc_alphee_pair(e1, e2, noise):
    return _single(e1, e2, "nc_alphee", noise.sigma_eps_sq)


def all_pair_estimates(energies, j_min, j_max, method, noise=None):
    method = canonical_method(method)
    if method == "standard":
        raise DomainError("the standard method has no pairwise estimates")
    if method == "nc_alphee" and noise is None:
        raise DomainError("nc_alphee requires a noise estimate")
    by_level = {e.level: e for e in energies}
    levels = list(range(j_min, j_max + 1))
    missing = [j for j in levels if j not in by_level]
    if missing:
        raise DomainError(f"no energy for levels {missing}")
    if len(levels) < 2:
        raise InsufficientDataError(f"level range [{j_min}, {j_max}] yields no pair")
    mean_sq = [by_level[j].mean_sq for j in levels]
    sigma2 = noise.sigma_eps_sq if noise is not None else 0.0
    h, v, c = pair_arrays(levels, mean_sq, method, sigma2)
    return [_to_estimate(a, b, hh, vv, cc) for (a, b), hh, vv, cc in zip(pair_ids(j_min, j_max), h, v, c)]


def noise_bias(level, sigma_eps_sq):
    """The term 2 * sigma_eps^2 * exp(psi(n / 2)) removed from n * mean_sq."""
    return 2.0 * sigma_eps_sq * math.exp(level_terms(level)[0])
