import numpy as np
import pytest

from cslstm import tensor as T
from cslstm.error import ArgumentError, ShapeError, TapeError


def _point(shape, seed=0, low=-1.0, high=1.0):
    return T.Tensor(np.random.default_rng(seed).uniform(low, high, size=shape))


@pytest.mark.parametrize("name, f, shapes", [
    ("add", lambda a, b: T.sum_(T.add(a, b) * a), [(3, 4), (3, 4)]),
    ("sub", lambda a, b: T.sum_(T.square(T.sub(a, b))), [(3, 4), (3, 4)]),
    ("mul", lambda a, b: T.sum_(T.mul(a, b)), [(2, 5), (2, 5)]),
    ("scalar", lambda a: T.sum_(T.square(2.0 - a * 3.0 + 1.0)), [(4,)]),
    ("matmul", lambda a, b: T.sum_(T.square(T.matmul(a, b))), [(3, 4), (4, 2)]),
    ("transpose", lambda a: T.sum_(T.transpose(a) * T.transpose(a)), [(2, 3)]),
    ("reshape", lambda a: T.sum_(T.square(T.reshape(a, (3, 2)))), [(2, 3)]),
    ("concat", lambda a, b: T.sum_(T.square(T.concat([a, b], axis=1))), [(2, 3), (2, 2)]),
    ("stack", lambda a, b: T.sum_(T.square(T.stack([a, b]))), [(3,), (3,)]),
    ("slice", lambda a: T.sum_(T.square(a[1:, :2])), [(3, 3)]),
    ("broadcast_rows", lambda a: T.sum_(T.square(T.broadcast_rows(a, 3))), [(4,)]),
    ("sigmoid", lambda a: T.sum_(T.sigmoid(a)), [(5,)]),
    ("tanh", lambda a: T.sum_(T.tanh(a)), [(5,)]),
    ("exp", lambda a: T.sum_(T.exp(a)), [(5,)]),
    ("log", lambda a: T.sum_(T.log(a * a + 1.0)), [(5,)]),
    ("clamp_min", lambda a: T.sum_(T.square(T.clamp_min(a, 0.3))), [(6,)]),
    ("mean_axis", lambda a: T.sum_(T.square(T.mean(a, axis=0))), [(3, 2)]),
    ("sum_axis", lambda a: T.sum_(T.square(T.sum_(a, axis=1))), [(3, 2)]),
    ("linear", lambda x, w, b: T.sum_(T.square(T.linear(x, w, b))), [(2, 3), (4, 3), (4,)]),
])
def test_primitive_gradients(name, f, shapes):
    points = [_point(s, seed=i) for i, s in enumerate(shapes)]
    assert T.grad_check(f, points) < 1e-4


def test_no_recording_outside_a_tape():
    a = T.Tensor([1.0, 2.0], requires_grad=True)
    out = T.sum_(a * a)
    assert out.is_leaf
    assert out.item() == 5.0


def test_constants_are_not_recorded():
    with T.Tape() as tape:
        T.add(T.Tensor([1.0]), T.Tensor([2.0]))
    assert len(tape) == 0


def test_backward_accumulates_into_leaves():
    a = T.Tensor([1.0, -2.0], requires_grad=True)
    with T.Tape() as tape:
        loss = T.sum_(a * a)
    tape.backward(loss)
    assert a.grad.tolist() == [2.0, -4.0]


def test_shared_input_gradient_sums_both_uses():
    a = T.Tensor([3.0], requires_grad=True)
    with T.Tape() as tape:
        loss = T.sum_(a * a + a)
    grad, = tape.gradients(loss, [a])
    assert grad.tolist() == [7.0]


def test_second_backward_raises():
    a = T.Tensor([1.0], requires_grad=True)
    with T.Tape() as tape:
        loss = T.sum_(a * 2.0)
    tape.backward(loss)
    with pytest.raises(TapeError):
        tape.backward(loss)


def test_foreign_loss_raises():
    a = T.Tensor([1.0], requires_grad=True)
    with T.Tape():
        loss = T.sum_(a * 2.0)
    with pytest.raises(TapeError):
        T.Tape().gradients(loss, [a])


def test_backward_needs_scalar():
    a = T.Tensor([1.0, 2.0], requires_grad=True)
    with T.Tape() as tape:
        out = a * 2.0
    with pytest.raises(ArgumentError):
        tape.gradients(out, [a])


def test_unused_parameter_gets_zero_gradient():
    a = T.Tensor([1.0], requires_grad=True)
    b = T.Tensor([[1.0, 2.0]], requires_grad=True)
    with T.Tape() as tape:
        loss = T.sum_(a * 3.0)
    assert tape.gradients(loss, [a, b])[1].tolist() == [[0.0, 0.0]]


@pytest.mark.parametrize("op, a, b", [
    (T.add, (2, 3), (3, 2)),
    (T.mul, (2,), (3,)),
    (T.matmul, (2, 3), (2, 3)),
])
def test_shape_mismatch(op, a, b):
    with pytest.raises(ShapeError):
        op(T.Tensor(np.zeros(a)), T.Tensor(np.zeros(b)))


def test_module_level_backward():
    a = T.Tensor([2.0], requires_grad=True)
    with T.Tape():
        loss = T.sum_(T.exp(a))
    T.backward(loss)
    assert np.allclose(a.grad, np.exp(2.0))


def test_clamp_has_zero_gradient_below_floor():
    a = T.Tensor([-5.0, 1.0], requires_grad=True)
    with T.Tape() as tape:
        loss = T.sum_(T.clamp_min(a, 0.0))
    grad, = tape.gradients(loss, [a])
    assert grad.tolist() == [0.0, 1.0]
