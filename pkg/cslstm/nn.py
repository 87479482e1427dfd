"""
Single-layer LSTM, linear heads, parameter initialization and the Adam optimizer.

All states are matrices of shape (batch, hidden); a single sequence is a batch of one.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from cslstm import tensor as T
from cslstm.error import ArgumentError, NumericError, ShapeError
from cslstm.utils import check_finite

GATES = ("f", "i", "c", "o")


@dataclass(eq=False)
class LstmParams:
    """ W_* are (hidden, hidden + input) and act on [h, x]; b_* are (hidden,) """

    W_f: T.Tensor
    W_i: T.Tensor
    W_c: T.Tensor
    W_o: T.Tensor
    b_f: T.Tensor
    b_i: T.Tensor
    b_c: T.Tensor
    b_o: T.Tensor

    def __post_init__(self):
        shapes = {(getattr(self, "W_" + g).shape, getattr(self, "b_" + g).shape) for g in GATES}
        if len(shapes) != 1:
            raise ShapeError("all four gates must share their shapes, got {}".format(sorted(shapes)))
        (w_shape, b_shape), = shapes
        if len(w_shape) != 2 or b_shape != (w_shape[0],) or w_shape[1] <= w_shape[0]:
            raise ShapeError("gate weights {} do not fit biases {}".format(w_shape, b_shape))

    @property
    def hidden_dim(self):
        return self.W_f.shape[0]

    @property
    def input_dim(self):
        return self.W_f.shape[1] - self.W_f.shape[0]

    def named(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(eq=False)
class LstmState:
    h: T.Tensor
    c: T.Tensor

    @classmethod
    def zeros(cls, hidden_dim, batch=1):
        return cls(T.Tensor(np.zeros((batch, hidden_dim))), T.Tensor(np.zeros((batch, hidden_dim))))


@dataclass(eq=False)
class LinearParams:
    """ weight is (out, in), bias is (out,) """

    weight: T.Tensor
    bias: T.Tensor

    def named(self):
        return {"weight": self.weight, "bias": self.bias}


def _uniform(rng, bound, shape, name):
    return T.Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def init_params(input_dim, hidden_dim, seed=0):
    """
    Weights ~ Uniform(-1/sqrt(hidden), 1/sqrt(hidden)); forget-gate bias 1, other biases 0.
    `seed` may also be a numpy Generator shared with other initializers.
    """
    if input_dim < 1 or hidden_dim < 1:
        raise ArgumentError("LSTM dimensions must be positive, got input {} hidden {}".format(input_dim, hidden_dim))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(hidden_dim)
    weights = {
        "W_" + g: _uniform(rng, bound, (hidden_dim, hidden_dim + input_dim), "W_" + g) for g in GATES
    }
    biases = {
        "b_" + g: T.Tensor(np.full(hidden_dim, 1.0 if g == "f" else 0.0), requires_grad=True, name="b_" + g)
        for g in GATES
    }
    return LstmParams(**weights, **biases)


def init_linear(input_dim, output_dim, seed=0, zero=False):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if zero:
        weight = T.Tensor(np.zeros((output_dim, input_dim)), requires_grad=True, name="weight")
    else:
        weight = _uniform(rng, 1.0 / np.sqrt(input_dim), (output_dim, input_dim), "weight")
    return LinearParams(weight, T.Tensor(np.zeros(output_dim), requires_grad=True, name="bias"))


def linear(params, x):
    return T.linear(x, params.weight, params.bias)


def lstm_step(params, state, x):
    """
    f = s(W_f [h, x] + b_f)     i = s(W_i [h, x] + b_i)     C~ = tanh(W_c [h, x] + b_c)
    C' = f * C + i * C~         o = s(W_o [h, x] + b_o)     h' = o * tanh(C')
    """
    if x.data.ndim != 2 or x.shape[1] != params.input_dim:
        raise ShapeError("LSTM input of shape {} does not fit input width {}".format(x.shape, params.input_dim))
    if state.h.shape != (x.shape[0], params.hidden_dim) or state.c.shape != state.h.shape:
        raise ShapeError(
            "LSTM state {} / {} does not fit batch {} and hidden size {}".format(
                state.h.shape, state.c.shape, x.shape[0], params.hidden_dim
            )
        )
    hx = T.concat([state.h, x], axis=1)
    f = T.sigmoid(T.linear(hx, params.W_f, params.b_f))
    i = T.sigmoid(T.linear(hx, params.W_i, params.b_i))
    candidate = T.tanh(T.linear(hx, params.W_c, params.b_c))
    c = f * state.c + i * candidate
    o = T.sigmoid(T.linear(hx, params.W_o, params.b_o))
    return LstmState(o * T.tanh(c), c)


def lstm_unroll(params, init_state, sequence):
    """
    Run lstm_step over a (T, input) sequence or a (T, batch, input) batch of sequences.
    Returns the hidden states stacked the same way plus the final state.
    """
    steps = sequence.shape[0] if sequence.data.ndim in (2, 3) else 0
    if steps == 0:
        raise ArgumentError("cannot unroll an LSTM over an empty sequence")
    batched = sequence.data.ndim == 3
    state = init_state
    outputs = []
    for t in range(steps):
        x = sequence[t] if batched else sequence[t:t + 1]
        state = lstm_step(params, state, x)
        outputs.append(state.h)
    hidden = T.stack(outputs, axis=0)
    if not batched:
        hidden = T.reshape(hidden, (steps, params.hidden_dim))
    return hidden, state


@dataclass(eq=False)
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def clip_grad_norm(grads, max_norm):
    """ Scale all gradients together so their global L2 norm is at most max_norm """
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if not np.isfinite(norm):
        raise NumericError("gradient norm is not finite")
    if max_norm is None or max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


def adam_step(params, grads, state):
    """
    One bias-corrected Adam update, in place on the arrays in `params` (name -> array).
    Raises NumericError before touching anything if a gradient is not finite.
    """
    for name, g in grads.items():
        if params[name].shape != g.shape:
            raise ShapeError("gradient {} has shape {}, parameter has {}".format(name, g.shape, params[name].shape))
        check_finite(g, "gradient for parameter {}".format(name))

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        params[name] -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
