import numpy as np
import pytest

from cslstm import tensor as T
from cslstm.checkpoint import snapshot
from cslstm.error import ArgumentError, DatasetError
from cslstm.model import CSLSTM, model_loss
from cslstm.trainer import TrainConfig, batch_gradients, build_dataset, evaluate, train
from cslstm.utils import THREADS_ENV


def _sine(n, period=8, seed=0):
    t = np.arange(n)
    return np.sin(2 * np.pi * t / period) + np.random.default_rng(seed).normal(0, 0.02, n)


def _dataset(config, n, start=None):
    values = _sine(n)
    return build_dataset(values, values, np.ones(n), config, start=start)


@pytest.mark.parametrize("extra, samples", [(0, 1), (9, 10)])
def test_build_dataset_sample_count(tiny_config, extra, samples):
    n = tiny_config.total_window + tiny_config.seasonal_window + extra
    dataset = _dataset(tiny_config, n)
    assert len(dataset) == samples
    assert dataset.positions[0] == tiny_config.total_window


def test_build_dataset_too_short(tiny_config):
    with pytest.raises(DatasetError):
        _dataset(tiny_config, tiny_config.total_window + tiny_config.seasonal_window - 1)


def test_build_dataset_start(tiny_config):
    dataset = _dataset(tiny_config, 80, start=40)
    assert dataset.positions.tolist() == list(range(40, 73))


def test_dataset_pairs_branches_by_position(tiny_config):
    dataset = _dataset(tiny_config, 60)
    seasonal, contextual = dataset[3]
    t = dataset.positions[3]
    values = _sine(60)
    assert np.array_equal(seasonal.target, values[t:t + tiny_config.seasonal_window])
    assert np.array_equal(contextual.target, values[t:t + 1])


@pytest.mark.parametrize("kwargs", [{"batch_size": 0}, {"max_epochs": 0}, {"patience": 0}])
def test_train_config_validation(kwargs):
    with pytest.raises(ArgumentError):
        TrainConfig(**kwargs)


def _run(config, seed, tmp_path=None, epochs=3):
    model = CSLSTM(config, seed=seed)
    dataset = _dataset(config, 200)
    val = _dataset(config, 120)
    log_path = None if tmp_path is None else tmp_path / "train.log"
    return model, train(model, dataset, val, TrainConfig(batch_size=32, max_epochs=epochs, seed=seed, lr=1e-2), log_path)


def test_training_is_deterministic(tiny_config):
    model_a, result_a = _run(tiny_config, seed=5)
    model_b, result_b = _run(tiny_config, seed=5)
    assert result_a.history == result_b.history
    for name, value in snapshot(model_a).items():
        assert np.array_equal(value, snapshot(model_b)[name])


def test_training_lowers_the_loss(tiny_config):
    _, result = _run(tiny_config, seed=0, epochs=5)
    train_losses = [h[1] for h in result.history]
    assert all(later < earlier for earlier, later in zip(train_losses, train_losses[1:]))


def test_best_validation_epoch_is_kept(tiny_config):
    model, result = _run(tiny_config, seed=1, epochs=4)
    assert result.best_val_loss == min(h[2] for h in result.history)
    assert np.isclose(evaluate(model, _dataset(tiny_config, 120)), result.best_val_loss)


def test_training_log_lines(tiny_config, tmp_path):
    _run(tiny_config, seed=2, tmp_path=tmp_path, epochs=2)
    lines = (tmp_path / "train.log").read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("epoch=1 train_loss=")
    assert " val_loss=" in lines[0] and " secs=" in lines[0]


def test_single_sample_with_large_batch(tiny_config):
    model = CSLSTM(tiny_config)
    n = tiny_config.total_window + tiny_config.seasonal_window
    result = train(model, _dataset(tiny_config, n), _dataset(tiny_config, n), TrainConfig(max_epochs=1))
    assert result.best_epoch == 1


def test_early_stopping(tiny_config):
    model = CSLSTM(tiny_config, seed=0)
    # a learning rate this large cannot keep improving the validation loss
    config = TrainConfig(batch_size=8, max_epochs=30, patience=1, lr=0.5)
    result = train(model, _dataset(tiny_config, 120), _dataset(tiny_config, 60), config)
    assert len(result.history) < 30


def test_sharded_gradients_match_single_thread(tiny_config, monkeypatch):
    model = CSLSTM(tiny_config, seed=3)
    dataset = _dataset(tiny_config, 100)
    index = np.arange(len(dataset))
    loss_one, grads_one = batch_gradients(model, dataset, index, threads=1)
    loss_four, grads_four = batch_gradients(model, dataset, index, threads=4)
    assert abs(loss_one - loss_four) < 1e-10
    for name in grads_one:
        assert np.max(np.abs(grads_one[name] - grads_four[name])) < 1e-10

    monkeypatch.setenv(THREADS_ENV, "3")
    _, result = _run(tiny_config, seed=4, epochs=1)
    assert np.isfinite(result.best_val_loss)


def test_batch_gradients_match_tape(tiny_config):
    model = CSLSTM(tiny_config, seed=6)
    dataset = _dataset(tiny_config, 70)
    index = np.array([0, 2, 5])
    with T.Tape() as tape:
        loss = model_loss(model, *dataset.batch(index))
    expected = tape.gradients(loss, model.parameters())
    value, grads = batch_gradients(model, dataset, index)
    assert value == loss.item()
    for g, name in zip(expected, model.named_parameters()):
        assert np.array_equal(g, grads[name])
