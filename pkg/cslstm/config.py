"""
Flat ``key = value`` configuration with ``#`` comments. Every key has a typed default; a value
in a file or an override must parse as the type of its default.
"""

import configparser
from pathlib import Path

from cslstm.detect import DELAY_K
from cslstm.error import ConfigError, DataError
from cslstm.model import ModelConfig
from cslstm.series import CsvSchema, SplitSpec
from cslstm.trainer import TrainConfig
from cslstm.wavelet import BASES

_SECTION = "cslstm"

DEFAULTS = {
    "csv.timestamp_col": "timestamp",
    "csv.value_col": "value",
    "csv.label_col": "label",
    "data.interval": 0,
    "data.max_gap": 10,
    "split.train_fraction": 0.35,
    "split.val_fraction": 0.15,
    "wavelet.basis": "db4",
    "wavelet.level": 0,
    "model.seasonal_window": 48,
    "model.total_window": 240,
    "model.context_window": 4,
    "model.context_stride": 0,
    "model.context_history": 0,
    "model.d_model": 256,
    "model.sigma_min": 0.001,
    "model.seasonal": True,
    "model.contextual": True,
    "model.covariate": True,
    "train.batch_size": 512,
    "train.max_epochs": 30,
    "train.seed": 0,
    "train.patience": 5,
    "train.lr": 0.001,
    "train.clip_norm": 5.0,
    "train.denoise": True,
    "train.mask": True,
    "train.self_mask": False,
    "train.self_mask_c": 3.0,
    "eval.k": 7,
    "eval.dataset": "",
    "score.segment": "test",
    "score.clean_c": 3.0,
    "paths.train_csv": "",
    "paths.checkpoint": "cslstm.ckpt",
    "paths.train_log": "",
}

# keys a checkpoint must agree on with the configuration it is used with
COMPATIBILITY_PREFIXES = ("model.", "data.", "split.", "csv.")

_BOOLEAN = configparser.ConfigParser.BOOLEAN_STATES


def _parse(key, raw):
    default = DEFAULTS[key]
    text = str(raw).strip()
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            return _BOOLEAN[text.lower()]
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except (KeyError, ValueError):
        raise ConfigError("{} = {!r} is not a valid {}".format(key, text, type(default).__name__))
    return text


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Config:
    """ Validated configuration values, keyed by their dotted names """

    def __init__(self, values=None):
        merged = dict(DEFAULTS)
        for key, raw in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError("unknown configuration key {!r}".format(key))
            merged[key] = _parse(key, raw)
        self._values = merged
        self._check()

    def _check(self):
        v = self._values
        if v["wavelet.basis"] not in BASES:
            raise ConfigError("wavelet.basis must be one of {}, got {!r}".format(", ".join(BASES), v["wavelet.basis"]))
        if v["wavelet.level"] < 0:
            raise ConfigError("wavelet.level must be 0 (automatic) or positive")
        if v["data.interval"] < 0 or v["data.max_gap"] < 0:
            raise ConfigError("data.interval and data.max_gap must not be negative")
        if v["eval.dataset"] and v["eval.dataset"] not in DELAY_K:
            raise ConfigError(
                "eval.dataset must be one of {}, got {!r}".format(", ".join(sorted(DELAY_K)), v["eval.dataset"])
            )
        if v["eval.k"] < 0:
            raise ConfigError("eval.k must not be negative")
        if v["score.segment"] not in ("test", "all"):
            raise ConfigError("score.segment must be 'test' or 'all', got {!r}".format(v["score.segment"]))
        if not v["train.self_mask_c"] > 0:
            raise ConfigError("train.self_mask_c must be positive")
        if v["score.clean_c"] < 0:
            raise ConfigError("score.clean_c must be 0 (no history cleaning) or positive")
        # the typed sections validate themselves
        self.model_config
        self.train_config
        self.split_spec

    def __getitem__(self, key):
        return self._values[key]

    def __eq__(self, other):
        return isinstance(other, Config) and self._values == other._values

    def __repr__(self):
        return "Config({})".format(self.diff(Config()) or "defaults")

    def with_overrides(self, overrides):
        merged = self.to_flat()
        merged.update(overrides)
        return Config(merged)

    def to_flat(self):
        """ key -> string, in the fixed order of DEFAULTS """
        return {key: _format(self._values[key]) for key in DEFAULTS}

    @classmethod
    def from_flat(cls, mapping):
        return cls(mapping)

    def diff(self, other, prefixes=None):
        """ Keys whose values differ, restricted to keys starting with one of `prefixes` """
        keys = [k for k in DEFAULTS if prefixes is None or k.startswith(tuple(prefixes))]
        return [k for k in keys if self._values[k] != other._values[k]]

    @property
    def csv_schema(self):
        v = self._values
        return CsvSchema(v["csv.timestamp_col"], v["csv.value_col"], v["csv.label_col"])

    @property
    def split_spec(self):
        try:
            return SplitSpec(self["split.train_fraction"], self["split.val_fraction"])
        except ValueError as e:
            raise ConfigError(str(e))

    @property
    def model_config(self):
        v = self._values
        return ModelConfig(
            seasonal_window=v["model.seasonal_window"],
            total_window=v["model.total_window"],
            context_window=v["model.context_window"],
            context_stride=v["model.context_stride"],
            context_history=v["model.context_history"],
            d_model=v["model.d_model"],
            sigma_min=v["model.sigma_min"],
            seasonal=v["model.seasonal"],
            contextual=v["model.contextual"],
            covariate=v["model.covariate"],
        )

    @property
    def train_config(self):
        v = self._values
        try:
            return TrainConfig(
                batch_size=v["train.batch_size"],
                max_epochs=v["train.max_epochs"],
                seed=v["train.seed"],
                patience=v["train.patience"],
                lr=v["train.lr"],
                clip_norm=v["train.clip_norm"],
            )
        except ValueError as e:
            raise ConfigError(str(e))

    @property
    def delay_k(self):
        """ eval.k unless a dataset preset is named """
        dataset = self["eval.dataset"]
        return DELAY_K[dataset] if dataset else self["eval.k"]


def _check_flat(text):
    for number, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            raise ConfigError("line {}: section header {!r} in a flat configuration".format(number, stripped))
        # configparser would read an indented line as the continuation of the value above it
        if line[0].isspace():
            raise ConfigError("line {}: unexpected indentation in {!r}".format(number, line))


def parse_config_text(text):
    _check_flat(text)
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",), delimiters=("=",)
    )
    # keys are case sensitive
    parser.optionxform = str
    try:
        parser.read_string("[{}]\n{}".format(_SECTION, text))
    except configparser.Error as e:
        raise ConfigError("unreadable configuration: {}".format(e.message if hasattr(e, "message") else e))
    return dict(parser.items(_SECTION))


def load_config(path=None, overrides=None):
    """ Defaults, then the file at `path`, then `overrides` """
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise DataError("configuration file {} does not exist".format(path))
        values.update(parse_config_text(path.read_text(encoding="utf-8")))
    values.update(overrides or {})
    return Config(values)
