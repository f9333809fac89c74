"""Per-signal estimation chain shared by the harness and the command line.

signal -> (optional endpoint detrend) -> DWT -> level mean squares
       -> noise variance -> pair table -> aggregates
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .aggregation.mlp import mlp_forward
from .aggregation.weighted import (
    arithmetic_aggregate,
    candidates_from_arrays,
    weighted_mean,
    weighted_median,
)
from .errors import DomainError, NoDataError, ShapeError
from .estimators import canonical_method, estimate_noise_variance, pair_arrays, pair_ids
from .wavelet import detrend_endpoints, dwt, level_mean_squares

AGGREGATES = ("mean", "median", "wmean", "wmedian", "nn")
STANDARD_AGGREGATE = "ols"


@dataclass(frozen=True, eq=False)
class Prepared:
    """Decomposition summary: mean squares indexed by level, finest-level noise."""

    mean_sq: np.ndarray
    sigma_eps_sq: float
    j_max: int

    def check_range(self, j_min, j_max):
        if not 0 <= j_min < j_max <= self.j_max:
            raise DomainError(f"level range [{j_min}, {j_max}] outside [0, {self.j_max}] or empty")


@dataclass(frozen=True, eq=False)
class PairTable:
    h_hat: np.ndarray
    variance: np.ndarray
    code: np.ndarray
    pair_ids: list

    @property
    def valid(self):
        return int(np.count_nonzero(self.code == _kernels.VALID))

    @property
    def excluded(self):
        return len(self.pair_ids) - self.valid


@dataclass(frozen=True)
class AggregateResult:
    h_hat: float  # NaN when nothing could be aggregated
    valid: int
    excluded: int


def prepare(signal, filt, detrend=True):
    if detrend:
        signal = detrend_endpoints(signal)
    decomp = dwt(signal, filt, j0=0)
    ms = level_mean_squares(decomp, 0, decomp.j_max)
    return Prepared(ms, estimate_noise_variance(decomp).sigma_eps_sq, decomp.j_max)


def pair_table(prep, method, j_min, j_max, sigma_eps_sq=None):
    """Candidate estimates for every pair in [j_min, j_max].

    ``sigma_eps_sq`` overrides the finest-level noise estimate (NC-ALPHEE only).
    """
    method = canonical_method(method)
    if method == "standard":
        raise DomainError("the standard method has no pairwise estimates")
    prep.check_range(j_min, j_max)
    s2 = prep.sigma_eps_sq if sigma_eps_sq is None else float(sigma_eps_sq)
    levels = np.arange(j_min, j_max + 1)
    h, v, c = pair_arrays(levels, prep.mean_sq[j_min: j_max + 1], method, s2)
    return PairTable(h, v, c, pair_ids(j_min, j_max))


def standard_estimate(prep, j_min, j_max):
    """OLS fit of log2 mean square on level; H = (-slope - 1) / 2."""
    prep.check_range(j_min, j_max)
    ms = prep.mean_sq[j_min: j_max + 1]
    good = ms > 0
    if good.sum() < 3:
        return AggregateResult(math.nan, int(good.sum()), int((~good).sum()))
    j = np.arange(j_min, j_max + 1, dtype=np.float64)[good]
    s = np.log2(ms[good])
    jc = j - j.mean()
    slope = float(np.dot(jc, s - s.mean()) / np.dot(jc, jc))
    return AggregateResult((-slope - 1.0) / 2.0, int(good.sum()), int((~good).sum()))


def impute_features(table):
    """Pair estimates with invalid entries replaced by the weighted median of the valid ones."""
    c = candidates_from_arrays(table.h_hat, table.variance, table.pair_ids)
    fill = weighted_median(c)
    return np.where(table.code == _kernels.VALID, table.h_hat, fill)


def aggregate(table, kind, model=None):
    n_ok, n_bad = table.valid, table.excluded
    try:
        if kind in ("wmean", "wmedian"):
            c = candidates_from_arrays(table.h_hat, table.variance, table.pair_ids)
            value = weighted_mean(c) if kind == "wmean" else weighted_median(c)
        elif kind in ("mean", "median"):
            value = arithmetic_aggregate(table.h_hat[table.code == _kernels.VALID], kind)
        elif kind == "nn":
            if model is None:
                raise DomainError("the nn aggregate needs a trained model")
            if model.pair_order is not None and list(model.pair_order) != list(table.pair_ids):
                raise ShapeError("model pair order does not match the level range")
            value = mlp_forward(model, impute_features(table))
        else:
            raise DomainError(f"unknown aggregate {kind!r}; expected one of {', '.join(AGGREGATES)}")
    except NoDataError:
        value = math.nan
    return AggregateResult(float(value), n_ok, n_bad)


def analyze(signal, filt, method, j_min, j_max, aggregates=("wmean", "wmedian"),
            detrend=True, sigma_eps_sq=None, model=None):
    """Estimate H from one signal; returns {aggregate: AggregateResult}."""
    prep = prepare(signal, filt, detrend)
    if canonical_method(method) == "standard":
        return {STANDARD_AGGREGATE: standard_estimate(prep, j_min, j_max)}
    table = pair_table(prep, method, j_min, j_max, sigma_eps_sq)
    return {kind: aggregate(table, kind, model) for kind in aggregates}


__all__ = [
    "AGGREGATES",
    "AggregateResult",
    "PairTable",
    "Prepared",
    "aggregate",
    "analyze",
    "impute_features",
    "pair_table",
    "prepare",
    "standard_estimate",
]
