import json
from dataclasses import replace

import numpy as np
import pytest

from hurstwave import DomainError, IncompatibleModelError, InsufficientDataError, ModelFormatError, ShapeError
from hurstwave.aggregation import (
    PRESETS,
    MlpModel,
    TrainConfig,
    hyperparam_search,
    loss_and_grads,
    mlp_forward,
    mlp_train,
    model_load,
    model_save,
)
from hurstwave.aggregation.mlp import sample_config
from hurstwave.errors import SearchFailedError, TrainingDivergedError

SMALL = TrainConfig(hidden_layers=(16, 8), activation="tanh", learning_rate=5e-3, batch_size=16,
                    weight_decay=1e-6, max_epochs=30, patience=5, folds=3, seed=3)


def toy_data(n=120, d=6, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    y = 0.5 + 0.1 * np.tanh(x[:, 0] - 0.5 * x[:, 1])
    return x, y


def random_model(sizes, activation, seed=0):
    rng = np.random.default_rng(seed)
    w = [rng.standard_normal((a, b)) * 0.7 for a, b in zip(sizes, sizes[1:])]
    b = [rng.standard_normal(s) * 0.3 for s in sizes[1:]]
    return MlpModel(sizes, w, b, activation, np.zeros(sizes[0]), np.ones(sizes[0]))


def test_zero_weight_model_outputs_bias():
    sizes = (5, 4, 3, 1)
    m = MlpModel(sizes, [np.zeros((a, b)) for a, b in zip(sizes, sizes[1:])],
                 [np.zeros(4), np.zeros(3), np.array([0.37])], "relu", np.zeros(5), np.ones(5))
    assert mlp_forward(m, np.arange(5.0)) == 0.37


def test_single_linear_layer():
    m = MlpModel((1, 1), [np.array([[2.5]])], [np.array([-0.25])], "tanh", np.zeros(1), np.ones(1))
    assert mlp_forward(m, [0.4]) == pytest.approx(2.5 * 0.4 - 0.25, abs=1e-16)


def test_forward_standardizes():
    m = MlpModel((1, 1), [np.array([[1.0]])], [np.array([0.0])], "relu", np.array([3.0]), np.array([2.0]))
    np.testing.assert_allclose(mlp_forward(m, np.array([[5.0], [1.0]])), [1.0, -1.0])
    with pytest.raises(ShapeError):
        mlp_forward(m, np.zeros(2))


def test_model_invariants():
    with pytest.raises(ShapeError):
        MlpModel((3, 2, 2), [np.zeros((3, 2)), np.zeros((2, 2))], [np.zeros(2), np.zeros(2)], "relu",
                 np.zeros(3), np.ones(3))
    with pytest.raises(DomainError):
        MlpModel((1, 1), [np.zeros((1, 1))], [np.zeros(1)], "relu", np.zeros(1), np.zeros(1))
    with pytest.raises(DomainError):
        MlpModel((1, 1), [np.zeros((1, 1))], [np.zeros(1)], "sigmoid", np.zeros(1), np.ones(1))


@pytest.mark.parametrize("activation", ["tanh", "leaky_relu", "relu"])
def test_gradients_match_finite_differences(activation):
    rng = np.random.default_rng(1)
    sizes = (7, 6, 5, 1)
    m = random_model(sizes, activation, seed=2)
    x = rng.standard_normal((11, 7))
    y = rng.uniform(0, 1, 11)
    wd = 1e-3
    _, gw, gb = loss_and_grads(m.weights, m.biases, activation, x, y, wd)
    params = m.weights + m.biases
    grads = gw + gb
    step = 1e-5
    worst = 0.0
    for _ in range(20):
        k = rng.integers(len(params))
        idx = tuple(rng.integers(s) for s in params[k].shape)
        orig = params[k][idx]
        params[k][idx] = orig + step
        up, _, _ = loss_and_grads(m.weights, m.biases, activation, x, y, wd)
        params[k][idx] = orig - step
        down, _, _ = loss_and_grads(m.weights, m.biases, activation, x, y, wd)
        params[k][idx] = orig
        fd = (up - down) / (2 * step)
        an = grads[k][idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
    assert worst <= 1e-4


def test_weight_decay_skips_biases():
    m = random_model((3, 2, 1), "tanh")
    x, y = np.zeros((4, 3)), np.zeros(4)
    l0, _, gb0 = loss_and_grads(m.weights, m.biases, "tanh", x, y, 0.0)
    l1, gw1, gb1 = loss_and_grads(m.weights, m.biases, "tanh", x, y, 0.1)
    assert l1 - l0 == pytest.approx(0.05 * sum(np.sum(w * w) for w in m.weights))
    for a, b in zip(gb0, gb1):
        np.testing.assert_array_equal(a, b)


def test_constant_target_is_learned():
    x, _ = toy_data(150)
    model, report = mlp_train(x, np.full(150, 0.5), SMALL)
    assert report.test_mse <= 1e-4
    assert np.all(np.isfinite(mlp_forward(model, x)))


def test_training_report_and_determinism(tmp_path):
    x, y = toy_data()
    m1, r1 = mlp_train(x, y, SMALL)
    m2, r2 = mlp_train(x, y, SMALL)
    for a, b in zip(m1.params(), m2.params()):
        np.testing.assert_array_equal(a, b)
    assert len(r1.fold_val_mse) == SMALL.folds and np.isfinite(r1.cv_mse)
    assert 1 <= r1.epoch_budget <= SMALL.max_epochs
    assert len(r1.test_index) == round(0.15 * len(y))
    assert set(r1.test_index).isdisjoint(r1.train_index)
    r1.write_csv(tmp_path / "report.csv")
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "fold,epoch,train_mse,val_mse" and len(lines) == len(r1.rows) + 1
    m3, _ = mlp_train(x, y, replace(SMALL, seed=4))
    assert not np.array_equal(m3.weights[0], m1.weights[0])


def test_scaler_uses_training_split_only():
    x, y = toy_data()
    m, r = mlp_train(x, y, SMALL)
    np.testing.assert_allclose(m.scaler_mean, x[r.train_index].mean(axis=0))


def test_training_preconditions():
    x, y = toy_data(120)
    with pytest.raises(InsufficientDataError):
        mlp_train(x[:20], y[:20], SMALL)
    xc = x.copy()
    xc[:, 2] = 1.0
    with pytest.raises(DomainError, match="constant"):
        mlp_train(xc, y, SMALL)
    with pytest.raises(ShapeError):
        mlp_train(x, y[:-1], SMALL)


def test_train_config_validation():
    for kw in ({"train_fraction": 1.0}, {"patience": 200, "max_epochs": 100}, {"activation": "elu"},
               {"learning_rate": 0.0}, {"folds": 1}, {"hidden_layers": ()}):
        with pytest.raises(DomainError):
            TrainConfig(**kw)


def test_divergence_reports_batch():
    x, y = toy_data()
    with pytest.raises(TrainingDivergedError) as info:
        mlp_train(x, y * 1e200, replace(SMALL, learning_rate=1.0))
    assert info.value.batch >= 0 and info.value.epoch >= 1


def test_presets_match_table():
    assert PRESETS["tuned-0.00"].hidden_layers == (484, 68, 228, 324, 324)
    assert PRESETS["tuned-0.25"].activation == "tanh"
    assert PRESETS["tuned-0.50"].batch_size == 16 and len(PRESETS["tuned-1.00"].hidden_layers) == 4
    assert PRESETS["tuned-0.75"].weight_decay == 2.29e-6


def test_sampled_configs_stay_in_ranges():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = sample_config(rng, SMALL)
        assert 2 <= len(c.hidden_layers) <= 5 and all(4 <= n <= 512 for n in c.hidden_layers)
        assert 1e-4 <= c.learning_rate <= 1e-2 and 1e-6 <= c.weight_decay <= 1e-4
        assert c.batch_size in (16, 32, 64) and c.activation in ("relu", "leaky_relu", "tanh")


def test_search_budget_one_and_determinism():
    x, y = toy_data()
    base = replace(SMALL, max_epochs=10, folds=2)
    a = hyperparam_search(x, y, 1, seed=5, base=base)
    assert a.config == sample_config(np.random.default_rng([5, 7, 0]), replace(base, seed=5))
    assert len(a.trials) == 1
    b = hyperparam_search(x, y, 3, seed=5, base=base)
    c = hyperparam_search(x, y, 3, seed=5, base=base)
    assert b.config == c.config
    assert b.config in [t[0] for t in b.trials]
    best = min(t[1] for t in b.trials)
    assert b.report.cv_mse == pytest.approx(best)


def test_search_all_diverge():
    x, y = toy_data()
    with pytest.raises(SearchFailedError) as info:
        hyperparam_search(x, y * 1e200, 2, seed=1, base=replace(SMALL, max_epochs=3, patience=2, folds=2))
    assert len(info.value.diagnostics) == 2


def test_save_load_round_trip(tmp_path):
    x, y = toy_data()
    m, _ = mlp_train(x, y, SMALL, pair_order=[(3, 4 + k) for k in range(6)], noise_level=0.25)
    model_save(m, tmp_path / "m.json")
    back = model_load(tmp_path / "m.json")
    probe = np.random.default_rng(7).standard_normal((50, 6))
    assert np.array_equal(mlp_forward(m, probe), mlp_forward(back, probe))
    assert back.pair_order == m.pair_order and back.trained_noise_level == 0.25
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) == {"format_version", "layer_sizes", "activation", "leaky_slope", "scaler_means",
                        "scaler_stds", "layers", "pair_order", "trained_noise_level"}


def test_load_errors(tmp_path):
    m = random_model((3, 2, 1), "relu")
    model_save(m, tmp_path / "m.json")
    raw = (tmp_path / "m.json").read_bytes()
    (tmp_path / "cut.json").write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ModelFormatError, match="offset") as info:
        model_load(tmp_path / "cut.json")
    assert 0 < info.value.offset <= len(raw) // 2
    doc = json.loads(raw)
    doc["format_version"] = 99
    (tmp_path / "v.json").write_text(json.dumps(doc))
    with pytest.raises(IncompatibleModelError):
        model_load(tmp_path / "v.json")
    doc["format_version"] = 1
    doc["layers"][0]["weights"] = [[1.0]]
    (tmp_path / "s.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        model_load(tmp_path / "s.json")
