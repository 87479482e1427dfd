"""
Checkpoint files.

A checkpoint is a UTF-8 text document::

    CSLSTM-CKPT 1
    [config]
    model.seasonal_window = 48
    ...
    [normalization]
    mean = 0.1234
    std = 1.5
    [training]
    best_epoch = 7
    best_val_loss = -2.25
    ...
    [parameters]
    seasonal.lstm.W_f 256 352
    <one line per matrix row, space separated>
    ...
    [end]

Values are written with Python's shortest round-trip float representation, so reading a
checkpoint back reproduces every parameter bit for bit, and two identical trainings write
identical files.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np

from cslstm.error import CompatibilityError, CorruptionError, DataError
from cslstm.series import NormStats

log = logging.getLogger(__name__)

MAGIC = "CSLSTM-CKPT"
VERSION = 1
SECTIONS = ("config", "normalization", "training", "parameters")


@dataclass(eq=False)
class Checkpoint:
    config: Dict[str, str]
    norm: NormStats
    params: Dict[str, np.ndarray]
    training: Dict[str, str] = field(default_factory=dict)


def _format(value):
    return repr(float(value))


def _key_values(lines):
    for line in lines:
        key, sep, value = line.partition("=")
        if not sep:
            raise CorruptionError("expected 'key = value', got {!r}".format(line))
        yield key.strip(), value.strip()


def write_checkpoint(path, checkpoint):
    out = ["{} {}".format(MAGIC, VERSION), "[config]"]
    out += ["{} = {}".format(k, v) for k, v in checkpoint.config.items()]
    out += ["[normalization]", "mean = " + _format(checkpoint.norm.mean), "std = " + _format(checkpoint.norm.std)]
    out += ["[training]"] + ["{} = {}".format(k, v) for k, v in checkpoint.training.items()]
    out.append("[parameters]")
    for name, array in checkpoint.params.items():
        out.append("{} {}".format(name, " ".join(str(d) for d in array.shape)))
        matrix = array.reshape(1, -1) if array.ndim == 1 else array
        out += [" ".join(_format(v) for v in row) for row in matrix]
    out.append("[end]")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
    log.info("wrote checkpoint %s (%d parameter arrays)", path, len(checkpoint.params))


def _split_sections(lines, path):
    sections, current = {}, None
    for line in lines:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current == "end":
                return sections
            if current not in SECTIONS:
                raise CorruptionError("unknown section [{}] in {}".format(current, path))
            sections[current] = []
        elif current is None:
            raise CorruptionError("content before the first section in {}".format(path))
        elif line:
            sections[current].append(line)
    raise CorruptionError("{} is truncated: no [end] marker".format(path))


def _parse_parameters(lines, path):
    params, i = {}, 0
    while i < len(lines):
        header = lines[i].split()
        try:
            name, shape = header[0], tuple(int(d) for d in header[1:])
        except (IndexError, ValueError):
            raise CorruptionError("bad parameter header {!r} in {}".format(lines[i], path))
        if len(shape) not in (1, 2):
            raise CorruptionError("parameter {} has unsupported shape {}".format(name, shape))
        rows = 1 if len(shape) == 1 else shape[0]
        block = lines[i + 1:i + 1 + rows]
        try:
            values = np.array([[float(v) for v in row.split()] for row in block], dtype=np.float64)
        except ValueError:
            raise CorruptionError("parameter {} holds a non-numeric value in {}".format(name, path))
        if len(block) != rows or values.size != int(np.prod(shape)):
            raise CorruptionError("parameter {} does not hold {} values in {}".format(name, shape, path))
        params[name] = values.reshape(shape)
        i += 1 + rows
    return params


def read_checkpoint(path):
    path = Path(path)
    if not path.is_file():
        raise DataError("checkpoint {} does not exist".format(path))
    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != MAGIC:
        raise CorruptionError("{} is not a checkpoint (missing {} header)".format(path, MAGIC))
    if head[1] != str(VERSION):
        raise CompatibilityError("checkpoint version {} is not supported (expected {})".format(head[1], VERSION))
    sections = _split_sections(lines[1:], path)
    missing = [s for s in SECTIONS if s not in sections]
    if missing:
        raise CorruptionError("{} lacks section(s) {}".format(path, ", ".join(missing)))

    norm = dict(_key_values(sections["normalization"]))
    try:
        stats = NormStats(float(norm["mean"]), float(norm["std"]))
    except (KeyError, ValueError):
        raise CorruptionError("{} has an unreadable [normalization] block".format(path))
    return Checkpoint(
        config=dict(_key_values(sections["config"])),
        norm=stats,
        params=_parse_parameters(sections["parameters"], path),
        training=dict(_key_values(sections["training"])),
    )


def snapshot(model):
    """ Copies of the current parameter values, in the model's fixed order """
    return {name: t.data.copy() for name, t in model.named_parameters().items()}


def restore(model, params):
    """ Load parameter arrays into a model built from the same configuration """
    named = model.named_parameters()
    if set(named) != set(params):
        differing = sorted(set(named) ^ set(params))
        raise CompatibilityError("checkpoint parameters do not match the model: {}".format(", ".join(differing)))
    for name, t in named.items():
        if t.shape != params[name].shape:
            raise CompatibilityError(
                "parameter {} has shape {} in the checkpoint, {} in the model".format(name, params[name].shape, t.shape)
            )
        t.data[...] = params[name]
