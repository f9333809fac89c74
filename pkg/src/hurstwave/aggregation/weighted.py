"""Inverse-variance weighting and weighted / arithmetic aggregates."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NoDataError, ShapeError

# cumulative weight this close to 1/2 counts as an exact half
HALF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedCandidates:
    estimates: np.ndarray
    weights: np.ndarray
    pair_ids: tuple
    excluded: int = 0

    def __post_init__(self):
        n = self.estimates.shape[0]
        if n < 1:
            raise NoDataError("no candidate estimates")
        if self.weights.shape[0] != n or len(self.pair_ids) != n:
            raise ShapeError("estimates, weights and pair ids differ in length")
        if not np.all(self.weights > 0):
            raise ShapeError("weights must be strictly positive")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ShapeError("weights do not sum to one")

    def __len__(self):
        return self.estimates.shape[0]


def candidates_from_arrays(h_hat, variance, pair_ids):
    """Build weights from parallel arrays, dropping entries whose estimate is NaN."""
    h_hat = np.asarray(h_hat, dtype=np.float64)
    variance = np.asarray(variance, dtype=np.float64)
    keep = np.isfinite(h_hat) & np.isfinite(variance) & (variance > 0)
    if not keep.any():
        raise NoDataError("no valid pair estimates to aggregate")
    inv = 1.0 / variance[keep]
    total = math.fsum(inv)
    ids = tuple(p for p, k in zip(pair_ids, keep) if k)
    return WeightedCandidates(h_hat[keep].copy(), inv / total, ids, int((~keep).sum()))


def normalize_weights(pairs):
    """Weights proportional to 1 / variance over the valid pairs only."""
    pairs = list(pairs)
    h = [p.h_hat if p.valid else np.nan for p in pairs]
    v = [p.variance if p.valid else np.nan for p in pairs]
    return candidates_from_arrays(h, v, [p.pair for p in pairs])


def weighted_mean(c):
    return math.fsum(c.weights * c.estimates)


def _sorted(c):
    keys = np.array(c.pair_ids, dtype=np.int64).reshape(len(c), -1)
    order = np.lexsort(tuple(keys[:, i] for i in range(keys.shape[1] - 1, -1, -1)) + (c.estimates,))
    return c.estimates[order], c.weights[order]


def weighted_median(c):
    """Order statistic whose lower and upper weight tails are both <= 1/2.

    Ties in the estimates are ordered by pair id.  When the cumulative weight
    hits 1/2 exactly, two adjacent order statistics qualify and their
    midpoint is returned.
    """
    h, w = _sorted(c)
    cum = np.cumsum(w)
    k = int(np.searchsorted(cum, 0.5 - HALF_TOL))
    k = min(k, h.shape[0] - 1)
    upper = math.fsum(w[k + 1:])
    if k + 1 < h.shape[0] and abs(upper - 0.5) <= HALF_TOL:
        return 0.5 * (h[k] + h[k + 1])
    return float(h[k])


def arithmetic_aggregate(estimates, kind="mean"):
    x = np.asarray([e for e in estimates if e is not None], dtype=np.float64)
    x = x[np.isfinite(x)]
    if x.shape[0] == 0:
        raise NoDataError("no estimates to aggregate")
    if kind == "mean":
        return math.fsum(x) / x.shape[0]
    if kind == "median":
        return float(np.median(x))
    raise ValueError(f"kind must be 'mean' or 'median', got {kind!r}")
