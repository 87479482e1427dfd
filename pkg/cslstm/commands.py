"""
The pipelines behind the command line. Every step runs inside ``stage(...)`` so a failure is
reported with the step it happened in.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from cslstm.checkpoint import Checkpoint, read_checkpoint, restore, write_checkpoint
from cslstm.config import COMPATIBILITY_PREFIXES, Config
from cslstm.detect import DELAY_K, evaluate, evaluate_pooled, forecast_series, score
from cslstm.error import AlignmentError, CompatibilityError, ConfigError, DataError, SchemaError, stage
from cslstm.model import CSLSTM
from cslstm.series import denormalize, impute_missing, infer_interval, ingest_csv, normalize, read_frame, split
from cslstm.synth import synthesize
from cslstm.trainer import build_dataset, train
from cslstm.wavelet import WaveletBasis, denoise, mad_sigma

log = logging.getLogger(__name__)

SCORE_COLUMNS = ("timestamp", "value", "score", "mu_s", "sigma_s", "mu_c", "sigma_c")


def load_series(path, config):
    """ Ingest and impute one CSV according to the csv.* and data.* settings """
    with stage("ingest"):
        series = ingest_csv(path, config.csv_schema)
        if len(series) < 2:
            raise DataError("{} holds {} row(s), at least 2 are needed".format(path, len(series)))
    with stage("impute"):
        interval = config["data.interval"] or infer_interval(series)
        series = impute_missing(series, interval, config["data.max_gap"])
    return series


def _denoise(values, config):
    level = config["wavelet.level"] or None
    return denoise(values, WaveletBasis.get(config["wavelet.basis"]), level)


def _float_text(value):
    # shortest text that reads back to the same double
    return repr(float(value))


def _write_frame(frame, path):
    frame.to_csv(path, index=False, float_format=_float_text, lineterminator="\n")
    log.info("wrote %d rows to %s", len(frame), path)


def cmd_denoise(in_path, out_path, config=None):
    config = config or Config()
    series = load_series(in_path, config)
    with stage("denoise"):
        cleaned = _denoise(series.values, config)
    frame = pd.DataFrame({"timestamp": series.timestamps, "value": series.values, "denoised": cleaned})
    if series.has_labels:
        frame["label"] = series.labels
    with stage("write"):
        _write_frame(frame, out_path)
    return cleaned


def training_mask(series, denoised, config):
    """
    1 marks a normal point. Labeled anomalies and imputed points are masked out; with
    train.self_mask also points far from their denoised value. train.mask=false keeps all.
    """
    n = len(series)
    if not config["train.mask"]:
        return np.ones(n)
    mask = 1.0 - series.labels.astype(np.float64)
    mask[series.filled == 1] = 0.0
    if config["train.self_mask"]:
        residual = series.values - denoised
        sigma = mad_sigma(residual)
        if sigma > 0:
            far = np.abs(residual) > config["train.self_mask_c"] * sigma
            mask[far] = 0.0
            log.info("self-masking removed %d points", int(far.sum()))
    return mask


def _validation_arrays(train_values, val, config, history):
    """ The last `history` training points followed by the validation split """
    values = np.concatenate([train_values[-history:], val.values])
    mask = np.ones(len(values))
    denoised = values
    if val.has_labels and val.labels.any():
        mask[history:] = 1.0 - val.labels
        denoised = _denoise(values, config) if config["train.denoise"] else values
    return values, denoised, mask, history


def cmd_train(config, in_path=None, checkpoint_path=None, log_path=None):
    """ ingest, impute, split, normalize, denoise, mask, train, write the checkpoint """
    in_path = in_path or config["paths.train_csv"]
    if not in_path:
        raise ConfigError("no training CSV: pass --in or set paths.train_csv")
    checkpoint_path = checkpoint_path or config["paths.checkpoint"]
    log_path = log_path or config["paths.train_log"] or None
    with stage("config"):
        model_config = config.model_config
        train_config = config.train_config
    for rule in model_config.rule_violations():
        log.info("window sizes outside the 5..7 rule of thumb: %s", rule)

    series = load_series(in_path, config)
    with stage("split"):
        train_part, val_part, _ = split(series, config.split_spec, total_window=model_config.total_window)
    with stage("normalize"):
        train_part, stats = normalize(train_part)
        val_part, _ = normalize(val_part, stats)
    with stage("denoise"):
        denoised = _denoise(train_part.values, config) if config["train.denoise"] else train_part.values
        mask = training_mask(train_part, denoised, config)
    with stage("dataset"):
        dataset = build_dataset(train_part.values, denoised, mask, model_config)
        history = min(model_config.history, len(train_part))
        values, val_denoised, val_mask, start = _validation_arrays(train_part.values, val_part, config, history)
        val_dataset = build_dataset(values, val_denoised, val_mask, model_config, start=start)
    log.info("training on %d samples, validating on %d", len(dataset), len(val_dataset))

    with stage("train"):
        model = CSLSTM(model_config, seed=train_config.seed)
        result = train(model, dataset, val_dataset, train_config, log_path)
    with stage("checkpoint"):
        training = {
            "best_epoch": str(result.best_epoch),
            "best_val_loss": repr(float(result.best_val_loss)),
            "epochs_run": str(len(result.history)),
            "samples": str(len(dataset)),
        }
        write_checkpoint(checkpoint_path, Checkpoint(config.to_flat(), stats, result.params, training))
    return result


def load_model(checkpoint_path, config=None):
    """ The model and stored configuration of a checkpoint, checked against `config` if given """
    with stage("checkpoint"):
        checkpoint = read_checkpoint(checkpoint_path)
        stored = Config.from_flat(checkpoint.config)
        if config is not None:
            differing = config.diff(stored, COMPATIBILITY_PREFIXES)
            if differing:
                raise CompatibilityError(
                    "checkpoint {} does not match the configuration: {}".format(
                        checkpoint_path,
                        ", ".join("{} (checkpoint {}, config {})".format(k, stored[k], config[k]) for k in differing),
                    )
                )
        model = CSLSTM(stored.model_config)
        restore(model, checkpoint.params)
    return model, stored, checkpoint.norm


def cmd_score(checkpoint_path, in_path, out_path, config=None):
    model, stored, stats = load_model(checkpoint_path, config)
    segment = (config or stored)["score.segment"]
    clean_c = (config or stored)["score.clean_c"]
    series = load_series(in_path, stored)
    c = model.config
    with stage("score"):
        normalized, _ = normalize(series, stats)
        start = c.history
        if segment == "test":
            start = max(start, stored.split_spec.boundaries(len(series))[1])
        if start >= len(series):
            raise AlignmentError(
                "no point of the {} points has the {} points of history needed for scoring".format(len(series), c.history)
            )
        forecasts = forecast_series(model, normalized.values, start, clean_c=clean_c)
        scores = score(
            forecasts,
            normalized.values[start:],
            series.timestamps[start:],
            series.labels[start:] if series.has_labels else None,
        )
    missing = np.full(len(scores), np.nan)
    frame = pd.DataFrame(
        {
            "timestamp": scores.timestamps,
            "value": series.values[start:],
            "score": scores.score,
            "mu_s": missing if scores.mu_s is None else denormalize(scores.mu_s, stats),
            "sigma_s": missing if scores.sigma_s is None else scores.sigma_s * stats.std,
            "mu_c": missing if scores.mu_c is None else denormalize(scores.mu_c, stats),
            "sigma_c": missing if scores.sigma_c is None else scores.sigma_c * stats.std,
        }
    )
    if scores.labels is not None:
        frame["label"] = scores.labels
    with stage("write"):
        _write_frame(frame, out_path)
    return scores


def read_scores(path):
    with stage("ingest"):
        path = Path(path)
        if not path.is_file():
            raise DataError("score file {} does not exist".format(path))
        frame = read_frame(path)
        for column in ("score", "label"):
            if column not in frame.columns:
                raise SchemaError("column {!r} not found in {}; eval needs labeled scores".format(column, path))
        if frame.empty:
            raise DataError("{} contains no rows".format(path))
        if frame["score"].isna().any() or frame["label"].isna().any():
            raise DataError("{} has empty score or label cells".format(path))
    return frame["score"].to_numpy(dtype=np.float64), frame["label"].to_numpy()


def resolve_k(config, k=None, dataset=None):
    """ An explicit k wins, then a dataset preset, then the configuration """
    if k is not None:
        return k
    if dataset:
        if dataset not in DELAY_K:
            raise ConfigError("unknown dataset {!r}, choose one of {}".format(dataset, ", ".join(sorted(DELAY_K))))
        return DELAY_K[dataset]
    return config.delay_k


def cmd_eval(in_paths, config=None, k=None, dataset=None, out_path=None):
    """ One report per score file plus, for several files, the pooled report """
    config = config or Config()
    k = resolve_k(config, k, dataset)
    series = [(Path(p).stem, read_scores(p)) for p in in_paths]
    with stage("eval"):
        reports = [evaluate(s, l, k, name) for name, (s, l) in series]
        if len(series) > 1:
            reports.append(evaluate_pooled([pair for _, pair in series], k))
    if out_path:
        with stage("write"):
            _write_frame(pd.DataFrame([r.to_dict() for r in reports]), out_path)
    return reports


def cmd_synth(kind, length, seed, out_path, config=None):
    config = config or Config()
    series = synthesize(kind, length, seed, config["model.seasonal_window"], config["model.total_window"])
    frame = pd.DataFrame({"timestamp": series.timestamps, "value": series.values, "label": series.labels})
    with stage("write"):
        _write_frame(frame, out_path)
    return series
