"""Aggregation of pairwise candidate estimates into a single Hurst estimate."""

from .mlp import (
    PRESETS,
    MlpModel,
    SearchResult,
    TrainConfig,
    TrainingReport,
    hyperparam_search,
    loss_and_grads,
    mlp_forward,
    mlp_train,
    model_load,
    model_save,
)
from .weighted import (
    WeightedCandidates,
    arithmetic_aggregate,
    candidates_from_arrays,
    normalize_weights,
    weighted_mean,
    weighted_median,
)

__all__ = [
    "PRESETS",
    "MlpModel",
    "SearchResult",
    "TrainConfig",
    "TrainingReport",
    "WeightedCandidates",
    "arithmetic_aggregate",
    "candidates_from_arrays",
    "hyperparam_search",
    "loss_and_grads",
    "mlp_forward",
    "mlp_train",
    "model_load",
    "model_save",
    "normalize_weights",
    "weighted_mean",
    "weighted_median",
]
