import pytest

from cslstm.config import DEFAULTS, Config, load_config, parse_config_text
from cslstm.error import ConfigError, DataError


def test_defaults():
    config = Config()
    assert config["train.batch_size"] == 512
    assert config["model.covariate"] is True
    assert config.model_config.total_window == 240
    assert config.train_config.max_epochs == 30
    assert config.delay_k == 7


def test_file_values_are_typed(write_csv):
    path = write_csv("run.conf", (
        "# scaled-down run\n"
        "model.seasonal_window = 32\n"
        "model.total_window = 160   # five windows\n"
        "model.covariate = false\n"
        "train.lr = 0.01\n"
        "wavelet.basis = haar\n"
    ))
    config = load_config(path)
    assert config["model.seasonal_window"] == 32
    assert config["model.covariate"] is False
    assert config["train.lr"] == 0.01
    assert config.model_config.n_windows == 5


def test_overrides_win_over_file(write_csv):
    path = write_csv("run.conf", "train.seed = 3\n")
    assert load_config(path, {"train.seed": "9"})["train.seed"] == 9


def test_unknown_key_is_named(write_csv):
    path = write_csv("run.conf", "lr_rate = 0.1\n")
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert "lr_rate" in str(excinfo.value)


@pytest.mark.parametrize("key, value", [
    ("train.batch_size", "many"),
    ("model.seasonal", "perhaps"),
    ("train.lr", "fast"),
    ("wavelet.basis", "sym8"),
    ("score.segment", "half"),
    ("eval.dataset", "mnist"),
    ("model.seasonal_window", "7"),
    ("split.train_fraction", "0.9"),
    ("train.batch_size", "0"),
    ("score.clean_c", "-1"),
])
def test_invalid_values(key, value):
    with pytest.raises(ConfigError) as excinfo:
        Config({key: value})
    assert key.split(".")[1] in str(excinfo.value)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_config(tmp_path / "none.conf")


def test_flat_round_trip():
    config = Config({"model.d_model": "64", "train.self_mask": "yes", "model.sigma_min": "0.01"})
    flat = config.to_flat()
    assert list(flat) == list(DEFAULTS)
    assert flat["train.self_mask"] == "true"
    assert Config.from_flat(flat) == config


def test_diff_by_prefix():
    a = Config({"model.d_model": "64", "train.seed": "1"})
    b = Config()
    assert a.diff(b) == ["model.d_model", "train.seed"]
    assert a.diff(b, ("model.",)) == ["model.d_model"]


def test_dataset_preset():
    assert Config({"eval.dataset": "yahoo"}).delay_k == 3
    assert Config({"eval.k": "11"}).delay_k == 11


def test_duplicate_key_is_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("train.seed = 1\ntrain.seed = 2\n")


@pytest.mark.parametrize("text, named", [
    ("train.seed = 3\n[extra]\nlr_rate = 0.1\nmodel.d_model = 8\n", "[extra]"),
    ("[cslstm]\ntrain.seed = 3\n", "[cslstm]"),
    ("train.seed = 3\n  model.d_model = 8\n", "line 2"),
    ("# header\ntrain.seed = 3\n\tmodel.d_model = 8\n", "line 3"),
])
def test_text_must_be_flat(text, named):
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(text)
    assert named in str(excinfo.value)


def test_indented_comments_and_blank_lines_are_fine():
    assert parse_config_text("train.seed = 3\n   # note\n  \nmodel.d_model = 8\n") == {
        "train.seed": "3",
        "model.d_model": "8",
    }
