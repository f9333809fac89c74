"""Feedforward regressor that maps candidate pair estimates to a final Hurst value.

Plain numpy: mini-batch Adam on mean squared error with an L2 weight penalty,
k-fold cross-validation with early stopping, and seeded random search over
the architecture/optimizer space.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import (
    DomainError,
    IncompatibleModelError,
    InsufficientDataError,
    ModelFormatError,
    SearchFailedError,
    ShapeError,
    TrainingDivergedError,
)

ACTIVATIONS = ("relu", "leaky_relu", "tanh")
LEAKY_SLOPE = 0.01
FORMAT_VERSION = 1
ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


def _act(name, z, slope=LEAKY_SLOPE):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, slope * z)
    if name == "tanh":
        return np.tanh(z)
    raise DomainError(f"unknown activation {name!r}")


def _act_grad(name, z, a, slope=LEAKY_SLOPE):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "leaky_relu":
        return np.where(z > 0, 1.0, slope)
    return 1.0 - a * a


@dataclass(eq=False)
class MlpModel:
    layer_sizes: tuple
    weights: list
    biases: list
    activation: str
    scaler_mean: np.ndarray
    scaler_std: np.ndarray
    pair_order: list | None = None
    trained_noise_level: float | None = None
    leaky_slope: float = LEAKY_SLOPE

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 1 or min(self.layer_sizes) < 1:
            raise ShapeError(f"bad layer sizes {self.layer_sizes}")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("layer count does not match layer sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_sizes[k], self.layer_sizes[k + 1]) or b.shape != (self.layer_sizes[k + 1],):
                raise ShapeError(f"layer {k} has shape {w.shape}/{b.shape}")
        d = self.layer_sizes[0]
        if self.scaler_mean.shape != (d,) or self.scaler_std.shape != (d,):
            raise ShapeError("feature scaler does not match the input size")
        if not np.all(self.scaler_std > 0):
            raise DomainError("feature scaler standard deviations must be positive")
        if self.pair_order is not None:
            self.pair_order = [tuple(int(v) for v in p) for p in self.pair_order]
            if len(self.pair_order) != d:
                raise ShapeError("pair order length does not match the input size")

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    def params(self):
        return [p for wb in zip(self.weights, self.biases) for p in wb]


def _forward(weights, biases, activation, xs, slope=LEAKY_SLOPE, keep=False):
    cache = []
    a = xs
    last = len(weights) - 1
    for k, (w, b) in enumerate(zip(weights, biases)):
        z = a @ w + b
        nxt = z if k == last else _act(activation, z, slope)
        if keep:
            cache.append((a, z, nxt))
        a = nxt
    return a[:, 0], cache


def mlp_forward(model, features):
    """Predict from raw (unstandardized) features; a 1-D input gives a float."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n_inputs:
        raise ShapeError(f"expected {model.n_inputs} features, got {x.shape[1]}")
    xs = (x - model.scaler_mean) / model.scaler_std
    out, _ = _forward(model.weights, model.biases, model.activation, xs, model.leaky_slope)
    return float(out[0]) if single else out


def loss_and_grads(weights, biases, activation, xs, y, weight_decay=0.0, slope=LEAKY_SLOPE):
    """MSE + (weight_decay / 2) * sum ||W||^2 and its gradient, via backprop."""
    with np.errstate(over="ignore", invalid="ignore"):
        pred, cache = _forward(weights, biases, activation, xs, slope, keep=True)
        resid = pred - y
        loss = float(np.mean(resid * resid)) + 0.5 * weight_decay * sum(float(np.sum(w * w)) for w in weights)
    n = y.shape[0]
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = (2.0 / n) * resid[:, None]
    for k in range(len(weights) - 1, -1, -1):
        a_in, z, a_out = cache[k]
        if k != len(weights) - 1:
            delta = delta * _act_grad(activation, z, a_out, slope)
        grads_w[k] = a_in.T @ delta + weight_decay * weights[k]
        grads_b[k] = delta.sum(axis=0)
        if k:
            delta = delta @ weights[k].T
    return loss, grads_w, grads_b


@dataclass(frozen=True)
class TrainConfig:
    hidden_layers: tuple = (64, 32)
    activation: str = "leaky_relu"
    learning_rate: float = 1e-3
    batch_size: int = 32
    weight_decay: float = 1e-6
    max_epochs: int = 100
    patience: int = 5
    folds: int = 5
    train_fraction: float = 0.85
    seed: int = 0
    search_trials: int = 20

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise DomainError("train_fraction must lie in (0, 1)")
        if self.patience > self.max_epochs:
            raise DomainError("patience cannot exceed max_epochs")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.weight_decay < 0:
            raise DomainError("learning rate, batch size and weight decay must be positive")
        if self.folds < 2 or not self.hidden_layers or min(self.hidden_layers) < 1:
            raise DomainError("need >= 2 folds and at least one non-empty hidden layer")


# Published tuned configurations, keyed by the noise level they were tuned for.
PRESETS = {
    "tuned-0.00": TrainConfig((484, 68, 228, 324, 324), "leaky_relu", 5.8e-4, 64, 9.18e-6),
    "tuned-0.25": TrainConfig((132, 260, 68, 4, 164), "tanh", 9.5e-3, 32, 7.12e-6),
    "tuned-0.50": TrainConfig((292, 164, 324, 484), "leaky_relu", 3.94e-4, 16, 1.10e-6),
    "tuned-0.75": TrainConfig((388, 4, 324, 228, 484), "leaky_relu", 4.71e-4, 16, 2.29e-6),
    "tuned-1.00": TrainConfig((324, 132, 356, 196), "leaky_relu", 5.52e-4, 16, 1.07e-6),
}


@dataclass
class TrainingReport:
    rows: list = field(default_factory=list)  # (fold, epoch, train_mse, val_mse)
    fold_val_mse: list = field(default_factory=list)
    fold_best_epoch: list = field(default_factory=list)
    epoch_budget: int = 0
    test_mse: float = math.nan
    test_index: np.ndarray | None = None
    train_index: np.ndarray | None = None

    @property
    def cv_mse(self):
        return float(np.mean(self.fold_val_mse)) if self.fold_val_mse else math.nan

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["fold", "epoch", "train_mse", "val_mse"])
            for fold, epoch, tr, va in self.rows:
                w.writerow([fold, epoch, repr(tr), "" if va is None else repr(va)])


def _init_params(sizes, activation, rng, y_mean):
    """He (relu family) or Glorot (tanh) normals; the output layer starts at zero
    so the untrained network predicts the training-target mean exactly."""
    weights, biases = [], []
    last = len(sizes) - 2
    for k in range(len(sizes) - 1):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        scale = math.sqrt(2.0 / (fan_in + fan_out)) if activation == "tanh" else math.sqrt(2.0 / fan_in)
        w = rng.standard_normal((fan_in, fan_out)) * scale
        weights.append(np.zeros_like(w) if k == last else w)
        biases.append(np.zeros(fan_out))
    biases[-1][0] = y_mean
    return weights, biases


class _Adam:
    def __init__(self, params, lr):
        self.lr = lr
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1 ** self.t
        c2 = 1.0 - ADAM_BETA2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def _mse(weights, biases, activation, xs, y):
    pred, _ = _forward(weights, biases, activation, xs)
    return float(np.mean((pred - y) ** 2))


def _fit(xs, y, config, rng, epochs, val=None, fold_label=0, rows=None):
    """Train from a fresh init; with ``val`` stop early and keep the best epoch."""
    sizes = (xs.shape[1],) + tuple(config.hidden_layers) + (1,)
    weights, biases = _init_params(sizes, config.activation, rng, float(np.mean(y)))
    params = [p for wb in zip(weights, biases) for p in wb]
    opt = _Adam(params, config.learning_rate)
    n = xs.shape[0]
    best = (math.inf, 0, None)
    stale = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start: start + config.batch_size]
            loss, gw, gb = loss_and_grads(weights, biases, config.activation, xs[idx], y[idx], config.weight_decay)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, b)
            opt.step(params, [g for pair in zip(gw, gb) for g in pair])
            losses.append(loss * idx.shape[0])
        train_mse = math.fsum(losses) / n
        val_mse = None
        if val is not None:
            val_mse = _mse(weights, biases, config.activation, *val)
            if not math.isfinite(val_mse):
                raise TrainingDivergedError(epoch, -1)
        if rows is not None:
            rows.append((fold_label, epoch, train_mse, val_mse))
        if val is None:
            continue
        if val_mse < best[0]:
            best = (val_mse, epoch, [p.copy() for p in params])
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    if val is not None:
        params = best[2]
        weights, biases = params[0::2], params[1::2]
        return weights, biases, best[0], best[1]
    return weights, biases, None, epochs


@dataclass
class _Prepared:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray


def _prepare(features, targets, config):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeError(f"features {x.shape} and targets {y.shape} disagree")
    if x.shape[0] < 10 * config.folds:
        raise InsufficientDataError(f"need at least {10 * config.folds} samples, got {x.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("features and targets must be finite")
    rng = np.random.default_rng([config.seed, 0])
    perm = rng.permutation(x.shape[0])
    n_train = int(round(config.train_fraction * x.shape[0]))
    tr, te = perm[:n_train], perm[n_train:]
    mean = x[tr].mean(axis=0)
    std = x[tr].std(axis=0)
    const = np.flatnonzero(~(std > 1e-12 * np.maximum(1.0, np.abs(mean))))
    if const.size:
        raise DomainError(f"constant feature column(s) {const.tolist()} in the training split")
    scale = lambda a: (a - mean) / std  # noqa: E731
    return _Prepared(scale(x[tr]), y[tr], scale(x[te]), y[te], mean, std, tr, te)


def _cross_validate(prep, config, rows=None):
    n = prep.x_train.shape[0]
    bounds = np.linspace(0, n, config.folds + 1).astype(int)
    vals, epochs = [], []
    for k in range(config.folds):
        val_idx = np.arange(bounds[k], bounds[k + 1])
        fit_idx = np.concatenate([np.arange(0, bounds[k]), np.arange(bounds[k + 1], n)])
        rng = np.random.default_rng([config.seed, 1, k])
        _, _, best_val, best_epoch = _fit(
            prep.x_train[fit_idx], prep.y_train[fit_idx], config, rng, config.max_epochs,
            val=(prep.x_train[val_idx], prep.y_train[val_idx]), fold_label=k, rows=rows,
        )
        vals.append(best_val)
        epochs.append(best_epoch)
    return vals, epochs


def _final(prep, config, vals, epochs, rows, pair_order, noise_level):
    budget = max(1, int(round(float(np.mean(epochs)))))
    rng = np.random.default_rng([config.seed, 2])
    weights, biases, _, _ = _fit(prep.x_train, prep.y_train, config, rng, budget, fold_label="final", rows=rows)
    sizes = (prep.x_train.shape[1],) + tuple(config.hidden_layers) + (1,)
    model = MlpModel(sizes, weights, biases, config.activation, prep.mean, prep.std, pair_order, noise_level)
    report = TrainingReport(rows, list(vals), list(epochs), budget)
    if prep.x_test.shape[0]:
        report.test_mse = _mse(weights, biases, config.activation, prep.x_test, prep.y_test)
    report.test_index = prep.test_index
    report.train_index = prep.train_index
    return model, report


def mlp_train(features, targets, config, pair_order=None, noise_level=None):
    """Cross-validate, pick the epoch budget, retrain on the full training split.

    Returns ``(model, report)``; ``report.test_mse`` is measured on the
    held-out ``1 - train_fraction`` share of the rows.
    """
    prep = _prepare(features, targets, config)
    rows = []
    vals, epochs = _cross_validate(prep, config, rows)
    return _final(prep, config, vals, epochs, rows, pair_order, noise_level)


def sample_config(rng, base):
    n_layers = int(rng.integers(2, 6))
    return replace(
        base,
        hidden_layers=tuple(int(v) for v in rng.integers(4, 513, size=n_layers)),
        activation=ACTIVATIONS[int(rng.integers(0, len(ACTIVATIONS)))],
        learning_rate=float(10 ** rng.uniform(-4, -2)),
        batch_size=int((16, 32, 64)[int(rng.integers(0, 3))]),
        weight_decay=float(10 ** rng.uniform(-6, -4)),
    )


@dataclass
class SearchResult:
    config: TrainConfig
    model: MlpModel
    report: TrainingReport
    trials: list  # (config, cv_mse or None, diagnostic)


def _run_trial(args):
    prep, config = args
    try:
        vals, epochs = _cross_validate(prep, config)
    except TrainingDivergedError as exc:
        return None, None, str(exc)
    return vals, epochs, None


def hyperparam_search(features, targets, budget, seed, base=None, pair_order=None, noise_level=None, workers=1):
    """Seeded random search; returns the config with the lowest mean CV MSE.

    All trials share one train/test split (drawn from ``seed``) so their
    validation scores are comparable.
    """
    if budget < 1:
        raise DomainError("search budget must be at least 1")
    base = replace(base or TrainConfig(), seed=seed)
    prep = _prepare(features, targets, base)
    configs = [sample_config(np.random.default_rng([seed, 7, t]), base) for t in range(budget)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_run_trial, [(prep, c) for c in configs]))
    else:
        outcomes = [_run_trial((prep, c)) for c in configs]
    trials, best = [], None
    for t, (cfg, (vals, epochs, diag)) in enumerate(zip(configs, outcomes)):
        score = None if vals is None else float(np.mean(vals))
        trials.append((cfg, score, diag))
        if score is not None and math.isfinite(score) and (best is None or score < best[0]):
            best = (score, t, vals, epochs)
    if best is None:
        raise SearchFailedError([(t, d) for t, (_, _, d) in enumerate(trials)])
    cfg = configs[best[1]]
    model, report = _final(prep, cfg, best[2], best[3], [], pair_order, noise_level)
    return SearchResult(cfg, model, report, trials)


# --- persistence ---------------------------------------------------------

def model_to_dict(model):
    return {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "leaky_slope": model.leaky_slope,
        "scaler_means": model.scaler_mean.tolist(),
        "scaler_stds": model.scaler_std.tolist(),
        "layers": [{"weights": w.tolist(), "bias": b.tolist()} for w, b in zip(model.weights, model.biases)],
        "pair_order": None if model.pair_order is None else [list(p) for p in model.pair_order],
        "trained_noise_level": model.trained_noise_level,
    }


def model_save(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def model_load(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid UTF-8", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ModelFormatError(f"{path}: {exc.msg}", offset) from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"{path}: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise IncompatibleModelError(
            f"{path}: model format version {doc['format_version']!r}, this build reads {FORMAT_VERSION}"
        )
    try:
        return MlpModel(
            layer_sizes=tuple(doc["layer_sizes"]),
            weights=[np.array(l["weights"], dtype=np.float64) for l in doc["layers"]],
            biases=[np.array(l["bias"], dtype=np.float64) for l in doc["layers"]],
            activation=doc["activation"],
            scaler_mean=np.array(doc["scaler_means"], dtype=np.float64),
            scaler_std=np.array(doc["scaler_stds"], dtype=np.float64),
            pair_order=doc.get("pair_order"),
            trained_noise_level=doc.get("trained_noise_level"),
            leaky_slope=float(doc.get("leaky_slope", LEAKY_SLOPE)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model ({exc})") from None


def config_to_dict(config):
    d = asdict(config)
    d["hidden_layers"] = list(config.hidden_layers)
    return d
