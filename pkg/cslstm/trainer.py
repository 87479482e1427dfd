"""
Training: sample assembly, the epoch loop with validation-based model selection and early
stopping, and optional data-parallel gradient shards.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np

from cslstm import nn
from cslstm import tensor as T
from cslstm.checkpoint import restore, snapshot
from cslstm.error import ArgumentError, DatasetError, NumericError
from cslstm.log import get_training_log
from cslstm.model import model_loss
from cslstm.spectral import WindowBatch, extract_context, extract_seasonal
from cslstm.utils import thread_count

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 512
    max_epochs: int = 30
    seed: int = 0
    patience: int = 5
    lr: float = 1e-3
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ArgumentError("batch_size must be at least 1, got {}".format(self.batch_size))
        if self.max_epochs < 1:
            raise ArgumentError("max_epochs must be at least 1, got {}".format(self.max_epochs))
        if self.patience < 1:
            raise ArgumentError("patience must be at least 1, got {}".format(self.patience))


class Dataset:
    """
    One sample per target position t, in increasing t. Sample i pairs the seasonal row
    (next w_s points) and the contextual row (next point) for the same t.
    """

    def __init__(self, seasonal, contextual, positions):
        self.seasonal = seasonal
        self.contextual = contextual
        self.positions = np.asarray(positions)

    def __len__(self):
        return len(self.positions)

    def __getitem__(self, i):
        return self.seasonal.take(i), self.contextual.take(i)

    def batch(self, index):
        return self.seasonal.take(index), self.contextual.take(index)


def build_dataset(values, denoised, mask, config, start=None):
    """
    Samples for every t in [max(history, start), n - w_s]. `start` lets a validation set use the
    end of the training data as history while only targeting validation points.
    """
    values = np.asarray(values, dtype=np.float64)
    denoised = np.asarray(denoised, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if not len(values) == len(denoised) == len(mask):
        raise ArgumentError("values, denoised and mask must have the same length")
    w_s, n = config.seasonal_window, len(values)
    first = config.history if start is None else max(config.history, start)
    last = n - w_s
    if last < first:
        raise DatasetError(
            "series of {} points is too short: at least {} needed for one sample".format(n, first + w_s)
        )
    positions = np.arange(first, last + 1)
    seasonal = WindowBatch.stack(
        extract_seasonal(values, mask, denoised, w_s, config.total_window, t, config.covariate) for t in positions
    )
    contextual = WindowBatch.stack(
        extract_context(
            values, mask, denoised, config.context_window, config.context_stride,
            config.context_history, t, config.covariate,
        )
        for t in positions
    )
    log.debug("built %d samples for positions %d..%d", len(positions), first, last)
    return Dataset(seasonal, contextual, positions)


@dataclass
class TrainResult:
    params: dict
    best_epoch: int
    best_val_loss: float
    history: List[tuple]


def _shard_gradients(model, shard, weight):
    params = model.parameters()
    with T.Tape() as tape:
        loss = T.mul(model_loss(model, *shard), weight)
    return loss.item(), tape.gradients(loss, params)


def batch_gradients(model, dataset, index, threads=1):
    """
    Loss and gradients of one mini-batch. With several threads the batch is cut into shards
    on separate tapes; shard results are summed in shard order.
    """
    shards = [s for s in np.array_split(index, max(1, min(threads, len(index)))) if len(s)]
    weights = [len(s) / len(index) for s in shards]
    if len(shards) == 1:
        results = [_shard_gradients(model, dataset.batch(index), 1.0)]
    else:
        with ThreadPoolExecutor(max_workers=len(shards)) as pool:
            results = list(pool.map(lambda sw: _shard_gradients(model, dataset.batch(sw[0]), sw[1]), zip(shards, weights)))
    loss = sum(r[0] for r in results)
    grads = [sum(r[1][k] for r in results) for k in range(len(results[0][1]))]
    names = list(model.named_parameters())
    return loss, dict(zip(names, grads))


def evaluate(model, dataset, batch_size=512):
    """ Mean composite loss over a dataset, no tape """
    if len(dataset) == 0:
        raise DatasetError("cannot evaluate an empty dataset")
    total = 0.0
    for start in range(0, len(dataset), batch_size):
        index = np.arange(start, min(start + batch_size, len(dataset)))
        total += model_loss(model, *dataset.batch(index)).item() * len(index)
    return total / len(dataset)


def train(model, dataset, val_dataset, config=TrainConfig(), log_path=None):
    """
    Mini-batch Adam on the composite loss. After every epoch the validation loss decides
    whether the parameters are kept; training stops after `patience` epochs without
    improvement. The returned parameters are those of the best validation epoch.
    """
    if len(dataset) == 0:
        raise DatasetError("cannot train on an empty dataset")
    threads = thread_count()
    training_log = get_training_log(log_path)
    rng = np.random.default_rng(config.seed)
    adam = nn.AdamState(lr=config.lr)
    named = {name: t.data for name, t in model.named_parameters().items()}

    best = TrainResult(snapshot(model), 0, np.inf, [])
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(len(dataset))
        epoch_loss = 0.0
        for b, first in enumerate(range(0, len(order), config.batch_size)):
            index = np.sort(order[first:first + config.batch_size])
            loss, grads = batch_gradients(model, dataset, index, threads)
            if not np.isfinite(loss):
                raise NumericError("loss became {} at epoch {} batch {}".format(loss, epoch, b))
            try:
                grads, _ = nn.clip_grad_norm(grads, config.clip_norm)
                nn.adam_step(named, grads, adam)
            except NumericError as e:
                raise NumericError("{} at epoch {} batch {}".format(e, epoch, b))
            epoch_loss += loss * len(index)
        train_loss = epoch_loss / len(dataset)
        val_loss = evaluate(model, val_dataset, config.batch_size)
        if not np.isfinite(val_loss):
            raise NumericError("validation loss became {} at epoch {}".format(val_loss, epoch))
        secs = time.perf_counter() - started
        training_log.info("epoch=%d train_loss=%.6f val_loss=%.6f secs=%.2f", epoch, train_loss, val_loss, secs)
        best.history.append((epoch, train_loss, val_loss))

        if val_loss < best.best_val_loss:
            best.params, best.best_epoch, best.best_val_loss = snapshot(model), epoch, val_loss
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.info("no validation improvement for %d epochs, stopping after epoch %d", stale, epoch)
                break

    restore(model, best.params)
    log.info("kept epoch %d with validation loss %.6f", best.best_epoch, best.best_val_loss)
    return best
