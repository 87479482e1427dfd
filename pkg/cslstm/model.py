"""
The dual-branch network.

The seasonal branch reads the recent history as consecutive non-overlapping windows (in the
frequency domain, with the raw windows as covariates) and forecasts the whole next window:
the mean is emitted as a packed spectrum and brought back to the time domain, the
log-variance is emitted directly per time step. The contextual branch reads short overlapping
windows over the most recent points and forecasts the next point only.

Both are trained with a Gaussian negative log-likelihood whose target is the hybrid series:
observed values where the mask marks normal points, denoised values elsewhere.
"""

import logging
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from cslstm import nn
from cslstm import tensor as T
from cslstm.error import ArgumentError, ConfigError, ShapeError
from cslstm.spectral import context_offsets, irfft_matrix

log = logging.getLogger(__name__)

RULE_OF_THUMB = (5, 7)


@dataclass(frozen=True)
class ModelConfig:
    seasonal_window: int = 48
    total_window: int = 240
    context_window: int = 4
    context_stride: int = 0
    context_history: int = 0
    d_model: int = 256
    sigma_min: float = 1e-3
    seasonal: bool = True
    contextual: bool = True
    covariate: bool = True

    def __post_init__(self):
        # 0 picks the documented default
        if self.context_stride == 0:
            object.__setattr__(self, "context_stride", max(1, self.context_window // 2))
        if self.context_history == 0:
            object.__setattr__(self, "context_history", self.seasonal_window)
        self.validate()

    def validate(self):
        w_s, total, w_c = self.seasonal_window, self.total_window, self.context_window
        if w_s < 2 or w_s % 2:
            raise ConfigError("model.seasonal_window must be even and at least 2, got {}".format(w_s))
        if w_c < 2 or w_c % 2:
            raise ConfigError("model.context_window must be even and at least 2, got {}".format(w_c))
        if total % w_s or total // w_s < 2:
            raise ConfigError(
                "model.total_window ({}) must be a multiple of model.seasonal_window ({}) "
                "covering at least 2 windows".format(total, w_s)
            )
        if not 1 <= self.context_stride < w_c:
            raise ConfigError(
                "model.context_stride ({}) must lie in [1, model.context_window ({}))".format(self.context_stride, w_c)
            )
        if not w_c <= self.context_history <= total or (self.context_history - w_c) % self.context_stride:
            raise ConfigError(
                "model.context_history ({}) must lie in [{}, {}] and leave a multiple of the stride {}".format(
                    self.context_history, w_c, total, self.context_stride
                )
            )
        if not self.sigma_min > 0:
            raise ConfigError("model.sigma_min must be positive, got {}".format(self.sigma_min))
        if self.d_model < 1:
            raise ConfigError("model.d_model must be positive, got {}".format(self.d_model))
        if not (self.seasonal or self.contextual):
            raise ConfigError("at least one of the seasonal and contextual branches must stay enabled")

    @property
    def n_windows(self):
        return self.total_window // self.seasonal_window

    @property
    def context_steps(self):
        return len(context_offsets(self.context_window, self.context_stride, self.context_history))

    @property
    def history(self):
        """ Points needed before the first position that can be forecast """
        return max(self.total_window, self.context_history)

    @property
    def log_var_floor(self):
        return 2.0 * float(np.log(self.sigma_min))

    def feature_dim(self, w):
        return 2 * w if self.covariate else w

    def rule_violations(self):
        low, high = RULE_OF_THUMB
        found = []
        if not low <= self.n_windows <= high:
            found.append("total_window / seasonal_window = {}".format(self.n_windows))
        ratio = self.seasonal_window / self.context_window
        if not low <= ratio <= high:
            found.append("seasonal_window / context_window = {:g}".format(ratio))
        return found

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


class Branch(Enum):
    SEASONAL = "seasonal"
    CONTEXTUAL = "contextual"


@dataclass(eq=False)
class GaussianForecast:
    """ mu and clamped log-variance, (batch, w_s) for the seasonal branch and (batch, 1) for the contextual one """

    mu: T.Tensor
    log_var: T.Tensor
    branch: Branch

    @property
    def variance(self):
        return np.exp(self.log_var.data)

    @property
    def sigma(self):
        return np.exp(0.5 * self.log_var.data)


def _sequence(batch, n_steps, feature_dim):
    inputs = np.asarray(batch.inputs, dtype=np.float64)
    if inputs.ndim == 2:
        inputs = inputs[None]
    if inputs.shape[1:] != (n_steps, feature_dim):
        raise ShapeError(
            "window batch of shape {} does not fit {} windows of {} features".format(inputs.shape, n_steps, feature_dim)
        )
    # time-major for the unroll
    return T.Tensor(np.ascontiguousarray(inputs.transpose(1, 0, 2)))


class CSLSTM:
    """ Parameters of both branches plus their forward passes """

    def __init__(self, config=ModelConfig(), seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        c, d = config, config.d_model
        self.seasonal_lstm = nn.init_params(c.feature_dim(c.seasonal_window), d, rng) if c.seasonal else None
        self.seasonal_mu = nn.init_linear(d, c.seasonal_window, rng) if c.seasonal else None
        self.seasonal_var = nn.init_linear(d, c.seasonal_window, rng) if c.seasonal else None
        self.context_lstm = nn.init_params(c.feature_dim(c.context_window), d, rng) if c.contextual else None
        self.context_head = nn.init_linear(d, 2, rng) if c.contextual else None
        self._irfft = T.Tensor(irfft_matrix(c.seasonal_window).T)
        log.debug("initialized %d parameters", sum(t.size for t in self.parameters()))

    def named_parameters(self):
        """ Flat name -> tensor mapping in a fixed order """
        groups = (
            ("seasonal.lstm", self.seasonal_lstm),
            ("seasonal.mu_head", self.seasonal_mu),
            ("seasonal.var_head", self.seasonal_var),
            ("contextual.lstm", self.context_lstm),
            ("contextual.head", self.context_head),
        )
        named = {}
        for prefix, group in groups:
            if group is None:
                continue
            for name, t in group.named().items():
                named["{}.{}".format(prefix, name)] = t
        return named

    def parameters(self):
        return list(self.named_parameters().values())

    def zero_heads(self):
        for head in (self.seasonal_mu, self.seasonal_var, self.context_head):
            if head is not None:
                head.weight.data[...] = 0.0
                head.bias.data[...] = 0.0

    def seasonal_forward(self, batch):
        c = self.config
        if self.seasonal_lstm is None:
            raise ConfigError("the seasonal branch is disabled in this model")
        seq = _sequence(batch, c.n_windows, c.feature_dim(c.seasonal_window))
        state = nn.LstmState.zeros(c.d_model, seq.shape[1])
        _, final = nn.lstm_unroll(self.seasonal_lstm, state, seq)
        spectrum = nn.linear(self.seasonal_mu, final.h)
        mu = T.matmul(spectrum, self._irfft)
        log_var = T.clamp_min(nn.linear(self.seasonal_var, final.h), c.log_var_floor)
        return GaussianForecast(mu, log_var, Branch.SEASONAL)

    def contextual_forward(self, batch):
        c = self.config
        if self.context_lstm is None:
            raise ConfigError("the contextual branch is disabled in this model")
        seq = _sequence(batch, c.context_steps, c.feature_dim(c.context_window))
        state = nn.LstmState.zeros(c.d_model, seq.shape[1])
        _, final = nn.lstm_unroll(self.context_lstm, state, seq)
        out = nn.linear(self.context_head, final.h)
        mu = out[:, 0:1]
        log_var = T.clamp_min(out[:, 1:2], c.log_var_floor)
        return GaussianForecast(mu, log_var, Branch.CONTEXTUAL)


def s_branch_forward(model, sample):
    return model.seasonal_forward(sample)


def c_branch_forward(model, sample):
    return model.contextual_forward(sample)


def _constant(values, shape, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise ShapeError("{} of shape {} does not match predictions of shape {}".format(name, arr.shape, shape))
    return arr.reshape(shape)


def hybrid_target(x, x_hat, mask):
    """ x where the mask marks normal points, the denoised value elsewhere """
    mask = np.asarray(mask, dtype=np.float64)
    return np.asarray(x, dtype=np.float64) * mask + np.asarray(x_hat, dtype=np.float64) * (1.0 - mask)


def masked_nll(mu, log_var, x, x_hat, mask, sigma_min=1e-3):
    """
    mean of log s2 + (x*mask + x_hat*(1 - mask) - mu)^2 / s2, with s2 = max(exp(log_var), sigma_min^2).
    mu and log_var are tensors, the targets plain arrays of the same size.
    """
    if mu.shape != log_var.shape:
        raise ShapeError("mu {} and log_var {} must have the same shape".format(mu.shape, log_var.shape))
    target = hybrid_target(
        _constant(x, mu.shape, "x"), _constant(x_hat, mu.shape, "x_hat"), _constant(mask, mu.shape, "mask")
    )
    lv = T.clamp_min(log_var, 2.0 * float(np.log(sigma_min)))
    residual = T.sub(T.Tensor.wrap(target), mu)
    return T.mean(lv + T.square(residual) * T.exp(-lv))


def branch_loss(forecast, batch, sigma_min):
    n = forecast.mu.shape[0]
    return masked_nll(
        forecast.mu,
        forecast.log_var,
        np.reshape(batch.target, (n, -1)),
        np.reshape(batch.target_denoised, (n, -1)),
        np.reshape(batch.target_mask, (n, -1)),
        sigma_min,
    )


def total_loss(seasonal_forecast, contextual_forecast, targets, sigma_min=1e-3):
    """
    L = L_s + L_c. `targets` is the (seasonal, contextual) pair of WindowBatches; a disabled
    branch passes None for its forecast and contributes nothing.
    """
    seasonal_batch, contextual_batch = targets
    terms = []
    if seasonal_forecast is not None:
        terms.append(branch_loss(seasonal_forecast, seasonal_batch, sigma_min))
    if contextual_forecast is not None:
        terms.append(branch_loss(contextual_forecast, contextual_batch, sigma_min))
    if not terms:
        raise ArgumentError("total_loss needs at least one branch forecast")
    loss = terms[0]
    for term in terms[1:]:
        loss = loss + term
    return loss


def loss_optima_oracle(x, x_hat, mask, mu=None, sigma_min=1e-3):
    """
    Closed-form minimizers of masked_nll: mu* is the hybrid target and, for a given mean,
    sigma*_t = max(|hybrid_t - mu_t|, sigma_min). With mu left out, mu = mu*.
    """
    mu_star = hybrid_target(x, x_hat, mask)
    mu = mu_star if mu is None else np.asarray(mu, dtype=np.float64)
    sigma_star = np.maximum(np.abs(mu_star - mu), sigma_min)
    return mu_star, sigma_star


def model_loss(model, seasonal_batch, contextual_batch):
    """ Forward both enabled branches and return the composite loss tensor """
    c = model.config
    seasonal = model.seasonal_forward(seasonal_batch) if c.seasonal else None
    contextual = model.contextual_forward(contextual_batch) if c.contextual else None
    return total_loss(seasonal, contextual, (seasonal_batch, contextual_batch), c.sigma_min)
