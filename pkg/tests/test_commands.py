import numpy as np
import pandas as pd
import pytest

from cslstm.__main__ import main, parse_overrides
from cslstm.checkpoint import read_checkpoint
from cslstm.commands import cmd_denoise, cmd_eval, cmd_score, cmd_synth, cmd_train, resolve_k, training_mask
from cslstm.config import Config, load_config
from cslstm.error import CompatibilityError, ConfigError, DataError, SchemaError
from cslstm.series import TimeSeries, ingest_csv

SMALL = (
    "model.seasonal_window = 8\n"
    "model.total_window = 24\n"
    "model.context_window = 4\n"
    "model.d_model = 6\n"
    "train.max_epochs = 2\n"
    "train.batch_size = 64\n"
    "train.lr = 0.01\n"
)

# scores and labels small enough to check by hand: anomalies at 2-3 and 7-8
HAND_SCORES = (
    "score,label\n"
    "0.1,0\n0.2,0\n0.9,1\n0.3,1\n0.1,0\n"
    "0.2,0\n0.5,0\n0.1,1\n0.6,1\n0.1,0\n"
)


@pytest.fixture
def small_config(write_csv):
    return write_csv("small.conf", SMALL)


@pytest.fixture
def trained(tmp_path, small_config):
    config = load_config(small_config)
    data = tmp_path / "synth.csv"
    cmd_synth("mixed", 1200, 0, data, config)
    checkpoint = tmp_path / "model.ckpt"
    cmd_train(config, data, checkpoint, tmp_path / "train.log")
    return config, data, checkpoint


def test_train_writes_checkpoint_and_log(tmp_path, trained):
    config, _, checkpoint = trained
    stored = read_checkpoint(checkpoint)
    assert stored.config == config.to_flat()
    assert stored.training["epochs_run"] == "2"
    assert len((tmp_path / "train.log").read_text().splitlines()) == 2


def test_score_and_eval(tmp_path, trained):
    config, data, checkpoint = trained
    out = tmp_path / "scores.csv"
    scores = cmd_score(checkpoint, data, out)
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["timestamp", "value", "score", "mu_s", "sigma_s", "mu_c", "sigma_c", "label"]
    # the test split starts at half of 1200 points
    assert len(frame) == 600
    assert frame["timestamp"].iloc[0] == 600
    assert np.all(frame["score"] >= 0)
    assert np.allclose(frame["score"], scores.score)

    report, = cmd_eval([out], config)
    for value in (report.best_f1, report.best_precision, report.best_recall, report.delay_f1):
        assert 0.0 <= value <= 1.0
    assert report.k == 7


def test_score_is_deterministic(tmp_path, trained):
    _, data, checkpoint = trained
    cmd_score(checkpoint, data, tmp_path / "a.csv")
    cmd_score(checkpoint, data, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_score_whole_series(tmp_path, trained):
    config, data, checkpoint = trained
    cmd_score(checkpoint, data, tmp_path / "all.csv", config.with_overrides({"score.segment": "all"}))
    # every point after the 24 points of warm-up history
    assert len(pd.read_csv(tmp_path / "all.csv")) == 1200 - 24


def test_score_of_training_data_is_calibrated(tmp_path, small_config, sine_csv):
    config = load_config(small_config, {"train.max_epochs": "40", "score.segment": "all"})
    checkpoint = tmp_path / "sine.ckpt"
    cmd_train(config, sine_csv, checkpoint, tmp_path / "train.log")
    scores = cmd_score(checkpoint, sine_csv, tmp_path / "all.csv", config)
    # the training split is the first 35% of the 600 points
    train = scores.timestamps < 210
    assert train.sum() == 210 - 24
    assert np.median(scores.score[train]) < 1.0


def test_score_rejects_incompatible_config(tmp_path, trained):
    config, data, checkpoint = trained
    with pytest.raises(CompatibilityError) as excinfo:
        cmd_score(checkpoint, data, tmp_path / "x.csv", config.with_overrides({"model.d_model": "8"}))
    assert "model.d_model" in str(excinfo.value)


def test_training_is_reproducible(tmp_path, small_config):
    config = load_config(small_config)
    data = tmp_path / "synth.csv"
    cmd_synth("point", 900, 4, data, config)
    cmd_train(config, data, tmp_path / "a.ckpt")
    cmd_train(config, data, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_train_needs_input():
    with pytest.raises(ConfigError):
        cmd_train(Config())


@pytest.mark.parametrize("k, delay_f1", [(0, 2 / 3), (1, 1.0)])
def test_eval_hand_computed(write_csv, k, delay_f1):
    path = write_csv("hand.csv", HAND_SCORES)
    report, = cmd_eval([path], Config(), k=k)
    assert report.best_f1 == pytest.approx(1.0)
    assert report.best_threshold == pytest.approx(0.6)
    assert report.delay_f1 == pytest.approx(delay_f1)
    assert report.k == k


def test_eval_several_files_adds_pooled_report(write_csv, tmp_path):
    first = write_csv("a.csv", HAND_SCORES)
    second = write_csv("b.csv", "score,label\n0.2,0\n0.7,1\n0.1,0\n")
    out = tmp_path / "reports.csv"
    reports = cmd_eval([first, second], Config(), k=3, out_path=out)
    assert [r.name for r in reports] == ["a", "b", "pooled"]
    assert len(pd.read_csv(out)) == 3


def test_eval_all_zero_labels(write_csv):
    report, = cmd_eval([write_csv("z.csv", "score,label\n0.3,0\n0.1,0\n")], Config())
    assert report.warning
    assert report.best_f1 == 0.0


@pytest.mark.parametrize("config, k, dataset, expected", [
    (Config(), None, None, 7),
    (Config({"eval.k": "4"}), None, None, 4),
    (Config(), None, "wsd", 40),
    (Config({"eval.dataset": "nab"}), None, None, 150),
    (Config({"eval.dataset": "nab"}), 2, "kpi", 2),
])
def test_k_precedence(config, k, dataset, expected):
    assert resolve_k(config, k, dataset) == expected


def test_training_mask():
    series = TimeSeries(np.arange(6), [0.0, 0.1, 9.0, 0.0, 0.1, 0.0], labels=[0, 1, 0, 0, 0, 0],
                        filled=[0, 0, 0, 0, 1, 0])
    denoised = np.zeros(6)
    assert training_mask(series, denoised, Config()).tolist() == [1, 0, 1, 1, 0, 1]
    assert training_mask(series, denoised, Config({"train.mask": "false"})).tolist() == [1] * 6
    masked = training_mask(series, denoised, Config({"train.self_mask": "true"}))
    assert masked[2] == 0


def test_parse_overrides():
    assert parse_overrides(["train.seed=4", "model.d_model = 8"]) == {"train.seed": "4", "model.d_model": "8"}
    with pytest.raises(ConfigError):
        parse_overrides(["train.seed"])


def test_cli_end_to_end_with_ablation(tmp_path, small_config, capsys):
    data, checkpoint, scores = tmp_path / "s.csv", tmp_path / "m.ckpt", tmp_path / "scores.csv"
    assert main(["synth", "--kind", "mixed", "--len", "900", "--seed", "1", "--out", str(data),
                 "--config", str(small_config)]) == 0
    assert main(["train", "--config", str(small_config), "--in", str(data), "--out-ckpt", str(checkpoint),
                 "--disable-contextual", "--set", "train.max_epochs=1"]) == 0
    stored = read_checkpoint(checkpoint).config
    assert stored["model.contextual"] == "false"
    assert stored["train.max_epochs"] == "1"
    assert main(["score", "--ckpt", str(checkpoint), "--in", str(data), "--out", str(scores)]) == 0
    assert pd.read_csv(scores)["mu_c"].isna().all()
    assert main(["eval", "--in", str(scores), "--dataset", "yahoo"]) == 0
    assert "(k=3)" in capsys.readouterr().out


def test_cli_missing_input_names_path(tmp_path, small_config, capsys):
    missing = tmp_path / "absent.csv"
    code = main(["train", "--config", str(small_config), "--in", str(missing), "--out-ckpt", str(tmp_path / "m")])
    assert code == 2
    err = capsys.readouterr().err
    assert "absent.csv" in err
    assert "[ingest]" in err


def test_cli_unknown_key(write_csv, capsys):
    path = write_csv("bad.conf", "lr_rate = 0.1\n")
    assert main(["train", "--config", str(path), "--in", "x.csv"]) == 1
    assert "lr_rate" in capsys.readouterr().err


def test_cli_empty_input(write_csv, tmp_path, trained):
    _, _, checkpoint = trained
    empty = write_csv("empty.csv", "timestamp,value\n")
    assert main(["score", "--ckpt", str(checkpoint), "--in", str(empty), "--out", str(tmp_path / "o.csv")]) == 2


def test_cli_denoise(write_csv, tmp_path):
    rows = "\n".join("{},{}".format(t, np.sin(t / 5.0)) for t in range(64))
    src = write_csv("d.csv", "timestamp,value\n" + rows + "\n")
    assert main(["denoise", "--in", str(src), "--out", str(tmp_path / "clean.csv")]) == 0
    frame = pd.read_csv(tmp_path / "clean.csv")
    assert list(frame.columns) == ["timestamp", "value", "denoised"]
    assert len(frame) == 64


def test_eval_needs_labels(write_csv):
    with pytest.raises(SchemaError):
        cmd_eval([write_csv("nolabel.csv", "score\n0.1\n0.4\n")], Config())


@pytest.mark.parametrize("argv", [[], ["fit"], ["eval"], ["synth", "--kind", "level_shift", "--out", "x.csv"]])
def test_cli_usage_errors(argv, capsys):
    assert main(argv) == 1


@pytest.mark.parametrize("content", [
    b"",
    b"timestamp,value\n0,1.0\n1,2.0\xff\xfe\n",
    b"timestamp,value\n0,1.0\n1,2.0,7\n2,3.0\n",
])
def test_cli_unreadable_input(tmp_path, capsys, content):
    path = tmp_path / "broken.csv"
    path.write_bytes(content)
    assert main(["denoise", "--in", str(path), "--out", str(tmp_path / "o.csv")]) == 2
    assert "[ingest]" in capsys.readouterr().err
    with pytest.raises(DataError):
        cmd_eval([path], Config())


def test_written_values_read_back_exactly(tmp_path):
    path = tmp_path / "synth.csv"
    written = cmd_synth("mixed", 600, 2, path, Config({"model.seasonal_window": "8", "model.total_window": "24"}))
    assert "np." not in path.read_text()
    read = ingest_csv(path)
    assert np.array_equal(read.values, written.values)
    assert np.array_equal(read.labels, written.labels)

    cleaned = cmd_denoise(path, tmp_path / "clean.csv")
    frame = pd.read_csv(tmp_path / "clean.csv", float_precision="round_trip")
    assert np.array_equal(frame["denoised"].to_numpy(), cleaned)
