"""
A small dense-tensor engine with reverse-mode automatic differentiation.

Values are float64 numpy arrays. Operations are recorded on the tape that is active on the
current thread (``with Tape() as tape:``) whenever one of their inputs requires a gradient;
outside a tape they only compute values, which is what inference uses. ``tape.backward(loss)``
walks the recorded nodes in exact reverse order and then frees the tape.

Shapes must match exactly for elementwise operations. The only implicit broadcast is a
Python scalar against a tensor; everything else is explicit (`broadcast_rows`).
"""

import threading
from typing import Callable, List, NamedTuple, Tuple

import numpy as np
from scipy.special import expit

from cslstm.error import ArgumentError, NumericError, ShapeError, TapeError

_local = threading.local()

# gradients below this are compared in absolute terms; central differences carry ~1e-11 of roundoff
GRAD_CHECK_FLOOR = 1e-6


def _tape_stack():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        # the tape that produced this tensor; None for leaves and constants
        self._tape = None

    @classmethod
    def wrap(cls, data):
        """ Take ownership of an array without copying it """
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._tape = None
        return out

    def __repr__(self):
        label = " {}".format(self.name) if self.name else ""
        return "Tensor{}(shape={}, requires_grad={})".format(label, self.shape, self.requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._tape is None

    def numpy(self):
        return self.data

    def item(self):
        if self.size != 1:
            raise ArgumentError("item() needs a tensor with one element, got shape {}".format(self.shape))
        return float(self.data.reshape(-1)[0])

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return slice_(self, index)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None):
        return sum_(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)


class Node(NamedTuple):
    out: Tensor
    inputs: Tuple[Tensor, ...]
    backward: Callable


class Tape:
    """
    Ordered record of executed operations. Nodes are appended as operations run, so each
    node's inputs are recorded before it; backward visits them in exact reverse order.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.consumed = False

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, out, inputs, backward):
        if self.consumed:
            raise TapeError("cannot record on a tape that already ran backward")
        out.requires_grad = True
        out._tape = self
        self.nodes.append(Node(out, inputs, backward))
        return out

    def gradients(self, loss, wrt):
        """ d loss / d w for every tensor in `wrt`; nothing is mutated except the tape, which is freed """
        if self.consumed:
            raise TapeError("backward already ran on this tape; record a new one")
        if loss.size != 1:
            raise ArgumentError("backward needs a scalar loss, got shape {}".format(loss.shape))
        if loss._tape is not self:
            raise TapeError("the loss was not recorded on this tape")
        grads = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for inp, ig in zip(node.inputs, node.backward(g)):
                if ig is None or not inp.requires_grad:
                    continue
                key = id(inp)
                grads[key] = grads[key] + ig if key in grads else ig
        self.nodes = []
        self.consumed = True
        return [grads.get(id(w), np.zeros_like(w.data)) for w in wrt]

    def backward(self, loss):
        """ Accumulate d loss / d leaf into `.grad` of every leaf that requires a gradient """
        leaves = {}
        for node in self.nodes:
            for inp in node.inputs:
                if inp.requires_grad and inp.is_leaf:
                    leaves[id(inp)] = inp
        leaves = list(leaves.values())
        for leaf, g in zip(leaves, self.gradients(loss, leaves)):
            leaf.grad = g if leaf.grad is None else leaf.grad + g


def backward(loss):
    """ Run backward on the tape that recorded `loss` """
    if loss._tape is None:
        raise TapeError("the loss was not recorded on any tape")
    loss._tape.backward(loss)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def _scalar(value):
    return isinstance(value, (int, float, np.floating, np.integer))


def _result(data, inputs, backward):
    out = Tensor.wrap(data)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        tape.record(out, tuple(inputs), backward)
    return out


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError("{}: shapes {} and {} do not match".format(op, a.shape, b.shape))


def add(a, b):
    if _scalar(b):
        a = as_tensor(a)
        return _result(a.data + b, (a,), lambda g: (g,))
    if _scalar(a):
        return add(b, a)
    _same_shape("add", a, b)
    return _result(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    if _scalar(b):
        return add(a, -b)
    if _scalar(a):
        b = as_tensor(b)
        return _result(a - b.data, (b,), lambda g: (-g,))
    _same_shape("sub", a, b)
    return _result(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b):
    if _scalar(b):
        a = as_tensor(a)
        b = float(b)
        return _result(a.data * b, (a,), lambda g: (g * b,))
    if _scalar(a):
        return mul(b, a)
    _same_shape("mul", a, b)
    return _result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul: shapes {} and {} are not aligned".format(a.shape, b.shape))
    return _result(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(a):
    if a.data.ndim != 2:
        raise ShapeError("transpose needs a matrix, got shape {}".format(a.shape))
    return _result(a.data.T.copy(), (a,), lambda g: (g.T,))


def reshape(a, shape):
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape: cannot view shape {} as {}".format(a.shape, tuple(shape)))
    return _result(data.copy(), (a,), lambda g: (g.reshape(a.shape),))


def concat(tensors, axis=0):
    tensors = list(tensors)
    ndim = tensors[0].data.ndim
    for t in tensors[1:]:
        rest = [d for i, d in enumerate(t.shape) if i != axis % ndim]
        first = [d for i, d in enumerate(tensors[0].shape) if i != axis % ndim]
        if t.data.ndim != ndim or rest != first:
            raise ShapeError("concat along axis {}: shapes {} and {} do not match".format(axis, tensors[0].shape, t.shape))
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def stack(tensors, axis=0):
    tensors = list(tensors)
    for t in tensors[1:]:
        _same_shape("stack", tensors[0], t)

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _result(np.stack([t.data for t in tensors], axis=axis), tensors, backward)


def slice_(a, index):
    """ Basic (non-fancy) indexing: ints and slices """

    def backward(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return _result(a.data[index].copy(), (a,), backward)


def broadcast_rows(a, n):
    """ Repeat a vector of shape (d,) into an (n, d) matrix """
    if a.data.ndim != 1:
        raise ShapeError("broadcast_rows needs a vector, got shape {}".format(a.shape))
    return _result(np.tile(a.data, (n, 1)), (a,), lambda g: (g.sum(axis=0),))


def sigmoid(a):
    s = expit(a.data)
    return _result(s, (a,), lambda g: (g * s * (1.0 - s),))


def tanh(a):
    t = np.tanh(a.data)
    return _result(t, (a,), lambda g: (g * (1.0 - t * t),))


def exp(a):
    e = np.exp(a.data)
    return _result(e, (a,), lambda g: (g * e,))


def log(a):
    return _result(np.log(a.data), (a,), lambda g: (g / a.data,))


def square(a):
    return _result(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def clamp_min(a, floor):
    """ max(a, floor) elementwise; the gradient is zero where the floor is active """
    keep = a.data >= floor
    return _result(np.where(keep, a.data, floor), (a,), lambda g: (g * keep,))


def sum_(a, axis=None):
    def backward(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _result(np.sum(a.data, axis=axis), (a,), backward)


def mean(a, axis=None):
    count = a.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis), 1.0 / count)


def linear(x, weight, bias):
    """ x @ weight.T + bias for x of shape (batch, in) and weight of shape (out, in) """
    return add(matmul(x, transpose(weight)), broadcast_rows(bias, x.shape[0]))


def grad_check(f, point, eps=1e-5):
    """
    Largest relative disagreement between the recorded gradient of the scalar `f` and
    central finite differences. `point` is a tensor or a sequence of tensors passed to f.
    """
    points = [point] if isinstance(point, Tensor) else list(point)
    variables = [Tensor(p.data, requires_grad=True) for p in points]
    with Tape() as tape:
        value = f(*variables)
    analytic = tape.gradients(value, variables)

    worst = 0.0
    for k, p in enumerate(points):
        base = [v.data.copy() for v in points]
        for i in np.ndindex(p.shape):
            plus = [Tensor(b) for b in base]
            minus = [Tensor(b) for b in base]
            plus[k].data[i] += eps
            minus[k].data[i] -= eps
            hi = f(*plus).item()
            lo = f(*minus).item()
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NumericError("function is not finite near the checked point (coordinate {} of input {})".format(i, k))
            numeric = (hi - lo) / (2.0 * eps)
            a = float(analytic[k][i])
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), GRAD_CHECK_FLOOR))
    return worst
