"""Digamma, trigamma and the moments of a log-chi-squared variable."""

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError

# Bernoulli numbers B_2 .. B_14
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)
_SHIFT = 8.0


def _check(x):
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise DomainError(f"argument must be a positive finite real, got {x!r}")
    return x


def digamma(x):
    """psi(x) for real x > 0.

    Lifts x above 8 with psi(x) = psi(x + 1) - 1/x, then applies the
    asymptotic expansion truncated after the x**-14 term.
    """
    x = _check(x)
    acc = 0.0
    while x < _SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x):
    """psi'(x) for real x > 0, same recurrence/asymptotic scheme as digamma."""
    x = _check(x)
    acc = 0.0
    while x < _SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    p = inv2 * inv
    for b in _BERNOULLI:
        series += b * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + series


@dataclass(frozen=True)
class LogChiSquaredMoments:
    """Mean and variance (natural-log units) of log(X), X ~ chi2(dof)."""

    dof: int
    mean: float
    variance: float


@lru_cache(maxsize=256)
def log_chi2_moments(dof):
    if isinstance(dof, bool) or int(dof) != dof or dof < 1:
        raise DomainError(f"dof must be a positive integer, got {dof!r}")
    dof = int(dof)
    half = dof / 2
    return LogChiSquaredMoments(dof, math.log(2.0) + digamma(half), trigamma(half))
