"""Seeded Monte Carlo driver: sweeps, summary metrics, NN training data, pair maps.

Every replicate draws its path from a 64-bit seed derived from
``(base_seed, H index, noise index, replicate)``, so results do not depend on
worker count or on which other grid cells are present.
"""

import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from .aggregation.mlp import model_load
from .errors import ConfigError, DomainError, HurstError
from .estimators import METHODS, canonical_method, pair_ids
from .fbm import SignalSpec, is_power_of_two, log2_length, synthesize
from .filters import check_decorrelation, make_filter
from .pipeline import (
    AGGREGATES,
    STANDARD_AGGREGATE,
    AggregateResult,
    aggregate,
    impute_features,
    pair_table,
    prepare,
    standard_estimate,
)

RESULT_COLUMNS = ("h_true", "sigma_eps", "method", "aggregate", "replicate",
                  "h_hat", "valid_pairs", "excluded_pairs", "seed")
METRIC_COLUMNS = ("h_true", "sigma_eps", "method", "aggregate", "mean", "sd",
                  "bias", "mse", "exclusion_rate", "n")
PAIRMAP_COLUMNS = ("j1", "j2", "count")
MIN_LEVEL = 3

_DEFAULT_RANGES = {"standard": (3, 13), "alphee": (3, 13), "nc_alphee": (3, 13), "nn": (3, 15)}


def derive_seed(base_seed, h_index, sigma_index, replicate):
    """Stable 64-bit stream id for one replicate."""
    ss = np.random.SeedSequence([int(base_seed), int(h_index), int(sigma_index), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_workers(workers=None):
    env = os.environ.get("HURST_THREADS", "").strip()
    cap = int(env) if env else (os.cpu_count() or 1)
    if cap < 1:
        raise ConfigError(f"HURST_THREADS must be a positive integer, got {env!r}")
    return max(1, min(cap, workers) if workers else cap)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    h_grid: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
    noise_grid: tuple = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)
    replicates: int = 200
    signal_length: int = 2 ** 16
    filter: str = "sym6"
    level_range: dict = field(default_factory=lambda: dict(_DEFAULT_RANGES))
    methods: tuple = ("standard", "alphee", "nc_alphee")
    aggregates: tuple = ("mean", "median", "wmean", "wmedian")
    base_seed: int = 0
    sigma_x: float = 0.1
    detrend: bool = True
    model_path: object = None  # path, or {noise level: path}
    allow_low_levels: bool = False

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("h_grid", tuple(float(h) for h in self.h_grid))
        set_("noise_grid", tuple(float(s) for s in self.noise_grid))
        set_("methods", tuple(canonical_method(m) for m in self.methods))
        set_("aggregates", tuple(self.aggregates))
        ranges = dict(_DEFAULT_RANGES)
        for k, v in dict(self.level_range).items():
            key = k if k == "nn" else canonical_method(k)
            if len(v) != 2:
                raise ConfigError(f"level_range[{k!r}] must be [j_min, j_max]")
            ranges[key] = (int(v[0]), int(v[1]))
        set_("level_range", ranges)
        if not self.h_grid or any(not 0 < h < 1 for h in self.h_grid):
            raise ConfigError("every H in h_grid must lie in (0, 1)")
        if not self.noise_grid or any(not s >= 0 for s in self.noise_grid):
            raise ConfigError("every noise level must be >= 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be positive")
        if not is_power_of_two(self.signal_length) or self.signal_length < 8:
            raise ConfigError(f"signal_length must be a power of two >= 8, got {self.signal_length}")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        if not self.sigma_x > 0:
            raise ConfigError("sigma_x must be positive")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        bad = [a for a in self.aggregates if a not in AGGREGATES]
        if bad or not self.aggregates:
            raise ConfigError(f"unknown aggregates {bad}; expected a subset of {AGGREGATES}")
        check_decorrelation(make_filter(self.filter), max(self.h_grid))
        finest = log2_length(self.signal_length) - 1
        used = set(self.methods) | ({"nn"} if "nn" in self.aggregates else set())
        for key in used:
            lo, hi = ranges[key]
            floor = 0 if self.allow_low_levels else MIN_LEVEL
            if not floor <= lo < hi <= finest:
                raise ConfigError(
                    f"level_range for {key} is [{lo}, {hi}]; need {floor} <= j_min < j_max <= {finest}"
                    + ("" if self.allow_low_levels else " (set allow_low_levels to go below 3)")
                )
        if "nn" in self.aggregates and self.model_path is None:
            raise ConfigError("the nn aggregate needs model_path")

    @classmethod
    def from_dict(cls, doc):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self):
        d = asdict(self)
        d["level_range"] = {k: list(v) for k, v in self.level_range.items()}
        for k in ("h_grid", "noise_grid", "methods", "aggregates"):
            d[k] = list(d[k])
        return d

    def replace(self, **kw):
        return ExperimentConfig.from_dict({**self.to_dict(), **kw})

    def model_for(self, sigma_eps):
        if isinstance(self.model_path, dict):
            for k, v in self.model_path.items():
                if float(k) == sigma_eps:
                    return v
            raise ConfigError(f"no model configured for noise level {sigma_eps}")
        return self.model_path


@dataclass(frozen=True)
class ResultRecord:
    h_true: float
    sigma_eps: float
    method: str
    aggregate: str
    replicate_index: int
    h_hat: float
    valid_pair_count: int
    excluded_pair_count: int
    seed: int

    def row(self):
        return (repr(self.h_true), repr(self.sigma_eps), self.method, self.aggregate, str(self.replicate_index),
                repr(self.h_hat), str(self.valid_pair_count), str(self.excluded_pair_count), str(self.seed))


@lru_cache(maxsize=16)
def _cached_model(path):
    return model_load(path)


_FAILED = AggregateResult(math.nan, 0, 0)


def _signal(config, hi, si, r):
    seed = derive_seed(config.base_seed, hi, si, r)
    spec = SignalSpec(config.signal_length, config.h_grid[hi], config.sigma_x, config.noise_grid[si], seed)
    return synthesize(spec), seed


def simulate_replicate(config, hi, si, r):
    """All records for one (H, noise, replicate) task, in method/aggregate order."""
    h, s = config.h_grid[hi], config.noise_grid[si]
    seed = derive_seed(config.base_seed, hi, si, r)
    out = []

    def emit(method, agg, res):
        out.append(ResultRecord(h, s, method, agg, r, res.h_hat, res.valid, res.excluded, seed))

    try:
        signal, _ = _signal(config, hi, si, r)
        prep = prepare(signal, make_filter(config.filter), config.detrend)
    except (HurstError, ValueError) as exc:
        warnings.warn(f"replicate ({h}, {s}, {r}) failed: {exc}", stacklevel=2)
        prep = None
    for method in config.methods:
        if method == "standard":
            emit(method, STANDARD_AGGREGATE,
                 _FAILED if prep is None else standard_estimate(prep, *config.level_range["standard"]))
            continue
        tables = {}
        for agg in config.aggregates:
            if prep is None:
                emit(method, agg, _FAILED)
                continue
            key = "nn" if agg == "nn" else method
            if key not in tables:
                tables[key] = pair_table(prep, method, *config.level_range[key])
            model = _cached_model(config.model_for(s)) if agg == "nn" else None
            emit(method, agg, aggregate(tables[key], agg, model))
    return out


def _task(args):
    config, hi, si, r = args
    return simulate_replicate(config, hi, si, r)


def _map(fn, tasks, workers):
    workers = resolve_workers(workers)
    if workers == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def run_sweep(config, workers=None):
    """Records for every (H, noise, replicate, method, aggregate), deterministically ordered."""
    tasks = [(config, hi, si, r)
             for hi in range(len(config.h_grid))
             for si in range(len(config.noise_grid))
             for r in range(config.replicates)]
    return [rec for chunk in _map(_task, tasks, workers) for rec in chunk]


def write_results(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        w.writerows(r.row() for r in records)


def read_results(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0]) != RESULT_COLUMNS:
        raise ConfigError(f"{path}: expected columns {RESULT_COLUMNS}")
    try:
        return [ResultRecord(float(d["h_true"]), float(d["sigma_eps"]), d["method"], d["aggregate"],
                             int(d["replicate"]), float(d["h_hat"]), int(d["valid_pairs"]),
                             int(d["excluded_pairs"]), int(d["seed"])) for d in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed results row ({exc})") from None


# --- summaries -----------------------------------------------------------

@dataclass(frozen=True)
class CellMetrics:
    h_true: float
    sigma_eps: float
    method: str
    aggregate: str
    mean: float
    sd: float
    bias: float
    mse: float
    exclusion_rate: float
    n: int

    def row(self):
        return tuple(repr(v) if isinstance(v, float) else str(v) for v in asdict(self).values())


def evaluate_metrics(records):
    """Mean, sd (n - 1), bias, MSE and pair exclusion rate per (H, noise, method, aggregate)."""
    cells = {}
    for r in records:
        cells.setdefault((r.h_true, r.sigma_eps, r.method, r.aggregate), []).append(r)
    out = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], k[2], k[3])):
        recs = cells[key]
        h = np.array([r.h_hat for r in recs])
        h = h[np.isfinite(h)]
        if h.shape[0] < 2:
            warnings.warn(f"cell {key} has fewer than 2 finite estimates; omitted", stacklevel=2)
            continue
        tot = sum(r.valid_pair_count + r.excluded_pair_count for r in recs)
        excl = sum(r.excluded_pair_count for r in recs)
        mean = math.fsum(h) / h.shape[0]
        err = h - key[0]
        out.append(CellMetrics(
            key[0], key[1], key[2], key[3], mean, float(np.std(h, ddof=1)), mean - key[0],
            math.fsum(err * err) / h.shape[0], excl / tot if tot else 0.0, int(h.shape[0]),
        ))
    return out


def write_metrics(metrics, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_COLUMNS)
        w.writerows(m.row() for m in metrics)


# --- NN training data ----------------------------------------------------

@dataclass(eq=False)
class TrainingData:
    features: np.ndarray  # rows ordered by (H index, replicate)
    targets: np.ndarray
    pair_order: list
    sigma_eps: float
    wmean: np.ndarray  # weighted-mean aggregate of the comparison range, same signals
    wmedian: np.ndarray
    seeds: np.ndarray


def _training_row(args):
    config, hi, si, r, method, nn_range, cmp_range = args
    signal, seed = _signal(config, hi, si, r)
    prep = prepare(signal, make_filter(config.filter), config.detrend)
    feats = impute_features(pair_table(prep, method, *nn_range))
    cmp_table = pair_table(prep, method, *cmp_range)
    return feats, aggregate(cmp_table, "wmean").h_hat, aggregate(cmp_table, "wmedian").h_hat, seed


def build_training_matrix(config, sigma_eps, method="nc_alphee", replicates=None, compare_range=None, workers=None):
    """One row of imputed pair estimates per (H, replicate) at a fixed noise level; target = H."""
    method = canonical_method(method)
    if method == "standard":
        raise DomainError("training features need a pairwise method")
    if float(sigma_eps) not in config.noise_grid:
        raise ConfigError(f"noise level {sigma_eps} is not in the configured noise_grid")
    si = config.noise_grid.index(float(sigma_eps))
    reps = config.replicates if replicates is None else replicates
    nn_range = config.level_range["nn"]
    cmp_range = compare_range or config.level_range[method]
    finest = log2_length(config.signal_length) - 1
    for lo, hi in (nn_range, cmp_range):
        if not 0 <= lo < hi <= finest:
            raise ConfigError(f"level range [{lo}, {hi}] does not fit signal_length {config.signal_length}")
    tasks = [(config, hi, si, r, method, nn_range, cmp_range)
             for hi in range(len(config.h_grid)) for r in range(reps)]
    rows = _map(_training_row, tasks, workers)
    return TrainingData(
        features=np.array([row[0] for row in rows]),
        targets=np.array([config.h_grid[t[1]] for t in tasks]),
        pair_order=pair_ids(*nn_range),
        sigma_eps=float(sigma_eps),
        wmean=np.array([row[1] for row in rows]),
        wmedian=np.array([row[2] for row in rows]),
        seeds=np.array([row[3] for row in rows], dtype=np.uint64),
    )


# --- pair reliability map ------------------------------------------------

@dataclass(frozen=True, eq=False)
class PairReliabilityMap:
    h_true: float
    center: float
    band_half_width: float
    counts: dict  # (j1, j2) -> int
    replicates: int

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PAIRMAP_COLUMNS)
            for (a, b), c in sorted(self.counts.items()):
                w.writerow((a, b, c))


def pair_reliability(pair_estimates, predictions, pair_order, h_true):
    """Count, per pair, the replicates whose estimate lies in mean +- 2 sd of ``predictions``.

    ``pair_estimates`` is [replicates x pairs]; NaN entries (invalid pairs)
    never count.
    """
    est = np.asarray(pair_estimates, dtype=np.float64)
    pred = np.asarray(predictions, dtype=np.float64)
    pred = pred[np.isfinite(pred)]
    if est.ndim != 2 or est.shape[1] != len(pair_order):
        raise DomainError("pair estimate matrix does not match the pair order")
    if pred.shape[0] < 2:
        raise DomainError("need at least two finite predictions to define the band")
    center = math.fsum(pred) / pred.shape[0]
    sd = float(np.std(pred, ddof=1))
    if not sd > 0:
        raise DomainError("degenerate band: predictions have zero spread")
    inside = np.abs(est - center) <= 2.0 * sd
    counts = {tuple(p): int(c) for p, c in zip(pair_order, inside.sum(axis=0))}
    return PairReliabilityMap(float(h_true), center, 2.0 * sd, counts, est.shape[0])


def _pair_row(args):
    config, hi, si, r, method, rng_, agg, model_path = args
    signal, _ = _signal(config, hi, si, r)
    prep = prepare(signal, make_filter(config.filter), config.detrend)
    table = pair_table(prep, method, *rng_)
    model = _cached_model(model_path) if agg == "nn" else None
    return table.h_hat, aggregate(table, agg, model).h_hat


def pairmap_run(config, h_true, sigma_eps, method="nc_alphee", aggregate_kind="wmedian", workers=None):
    """Pair reliability for one (H, noise) cell over the NN level range."""
    if float(h_true) not in config.h_grid or float(sigma_eps) not in config.noise_grid:
        raise ConfigError("h_true and sigma_eps must be grid values of the config")
    hi, si = config.h_grid.index(float(h_true)), config.noise_grid.index(float(sigma_eps))
    method = canonical_method(method)
    model_path = config.model_for(float(sigma_eps)) if aggregate_kind == "nn" else None
    rng_ = config.level_range["nn"]
    tasks = [(config, hi, si, r, method, rng_, aggregate_kind, model_path) for r in range(config.replicates)]
    rows = _map(_pair_row, tasks, workers)
    return pair_reliability([r[0] for r in rows], [r[1] for r in rows], pair_ids(*rng_), h_true)


__all__ = [
    "METHODS",
    "ExperimentConfig",
    "PairReliabilityMap",
    "ResultRecord",
    "TrainingData",
    "build_training_matrix",
    "derive_seed",
    "evaluate_metrics",
    "pair_reliability",
    "pairmap_run",
    "read_results",
    "run_sweep",
    "simulate_replicate",
    "write_metrics",
    "write_results",
]
