from pathlib import Path

import numpy as np
import pytest

from cslstm.model import ModelConfig


@pytest.fixture
def tiny_config():
    """ Windows small enough for finite differences and few-second training runs """
    return ModelConfig(seasonal_window=8, total_window=24, context_window=4, d_model=6)


@pytest.fixture
def write_csv(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def sine_csv(tmp_path):
    """ 600 labeled points of a period-8 sine with light noise and three spikes """
    rng = np.random.default_rng(3)
    t = np.arange(600)
    values = np.sin(2 * np.pi * t / 8) + rng.normal(0, 0.05, len(t))
    labels = np.zeros(len(t), dtype=int)
    for p in (150, 420, 530):
        values[p] += 5
        labels[p] = 1
    path = Path(tmp_path) / "sine.csv"
    lines = ["timestamp,value,label"] + ["{},{!r},{}".format(a, float(b), c) for a, b, c in zip(t, values, labels)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
