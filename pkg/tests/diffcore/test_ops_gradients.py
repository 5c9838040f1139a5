import numpy as np
import pytest

from src.core.errors import (DomainError, InvalidAxisError, MaskError, NonScalarLossError,
                             ShapeMismatchError)
from src.diffcore import Tape, Tensor, backward, grad_check, ops, parameter

TOL = 1e-5


def weighted_sum(fn, params, seed=0):
    """Скалярная функция sum(fn(params) * W) со случайными фиксированными весами"""
    shape = fn(*params).shape
    weights = np.random.default_rng(seed).uniform(0.5, 1.5, shape)
    return lambda: ops.reduce("sum", ops.mul(fn(*params), weights))


def make_params(*shapes, low=-1.5, high=1.5, seed=11):
    rng = np.random.default_rng(seed)
    return [parameter(rng.uniform(low, high, shape)) for shape in shapes]


@pytest.mark.parametrize("kind", ["add", "sub", "mul"])
def test_binary_gradients_with_broadcasting(kind):
    params = make_params((3, 4), (1, 4))
    fn = lambda a, b: ops.elementwise(kind, a, b)
    assert grad_check(weighted_sum(fn, params), params) < TOL


def test_div_gradient():
    params = make_params((3, 4), (3, 1))
    params[1].data[...] = np.abs(params[1].data) + 0.5
    assert grad_check(weighted_sum(ops.div, params), params) < TOL


@pytest.mark.parametrize("kind", ["exp", "tanh", "silu", "neg", "sigmoid", "softplus", "exprel"])
def test_unary_gradients(kind):
    params = make_params((2, 5))
    fn = lambda a: ops.elementwise(kind, a)
    assert grad_check(weighted_sum(fn, params), params) < TOL


def test_log_gradient_on_positive_inputs():
    params = make_params((4, 3), low=0.3, high=2.0)
    assert grad_check(weighted_sum(ops.log, params), params) < TOL


def test_exprel_near_zero_uses_series_limit():
    x = parameter(np.array([[-1e-3, 0.0, 1e-3, 5e-3]]))
    assert grad_check(weighted_sum(ops.exprel, [x]), [x]) < TOL
    assert ops.exprel(Tensor([0.0])).item() == 1.0


def test_scale_power_clip_gradients():
    params = make_params((3, 3), low=0.2, high=1.8)
    assert grad_check(weighted_sum(lambda a: ops.scale(a, -2.5), params), params) < TOL
    assert grad_check(weighted_sum(lambda a: ops.power(a, 1.5), params), params) < TOL
    # точки вдали от границ отсечения
    x = parameter(np.array([[-3.0, -0.5, 0.4, 2.7]]))
    assert grad_check(weighted_sum(lambda a: ops.clip(a, -2.0, 2.0), [x]), [x]) < TOL


def test_matmul_and_batched_matmul_gradients():
    a, b = make_params((3, 4), (4, 2))
    assert grad_check(weighted_sum(ops.matmul, [a, b]), [a, b]) < TOL
    c, d = make_params((2, 3, 4), (2, 4, 5), seed=5)
    assert grad_check(weighted_sum(ops.batched_matmul, [c, d]), [c, d]) < TOL


@pytest.mark.parametrize("kind", ["sum", "mean", "max"])
@pytest.mark.parametrize("axis", [None, 0, 1])
def test_reduce_gradients(kind, axis):
    params = make_params((3, 5))
    fn = lambda a: ops.reduce(kind, a, axis=axis)
    if axis is None:
        f = lambda: ops.scale(fn(*params), 1.7)
    else:
        f = weighted_sum(fn, params)
    assert grad_check(f, params) < TOL


def test_max_gradient_goes_to_first_argmax():
    x = parameter(np.array([[1.0, 3.0, 3.0, 2.0]]))
    with Tape() as tape:
        loss = ops.reduce("max", x)
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, [[0.0, 1.0, 0.0, 0.0]])


def test_l2norm_gradient_and_zero_subgradient():
    params = make_params((4, 3))
    assert grad_check(weighted_sum(lambda a: ops.l2norm(a, axis=-1), params), params) < TOL
    zero = parameter(np.zeros((1, 3)))
    with Tape() as tape:
        loss = ops.reduce("sum", ops.l2norm(zero))
    backward(tape, loss)
    np.testing.assert_array_equal(zero.grad, np.zeros((1, 3)))


def test_structural_op_gradients():
    a, b = make_params((2, 3, 4), (2, 3, 2))
    assert grad_check(weighted_sum(lambda x: ops.reshape(x, (6, 4)), [a]), [a]) < TOL
    assert grad_check(weighted_sum(lambda x: ops.transpose(x, (2, 0, 1)), [a]), [a]) < TOL
    assert grad_check(weighted_sum(lambda x: ops.slice_axis(x, 2, 1, 3), [a]), [a]) < TOL
    assert grad_check(weighted_sum(lambda x, y: ops.concat([x, y], axis=-1), [a, b]), [a, b]) < TOL
    assert grad_check(weighted_sum(lambda x: ops.take(x, [3, 0, 2, 1], axis=-1), [a]), [a]) < TOL


def test_softmax_masked_gradient_and_zero_weights():
    logits = make_params((2, 4, 4))[0]
    mask = np.triu(np.ones((4, 4), dtype=bool), k=1)
    assert grad_check(weighted_sum(lambda x: ops.softmax_masked(x, mask), [logits]), [logits]) < TOL
    weights = ops.softmax_masked(logits, mask).data
    assert np.all(weights[:, mask] == 0.0)
    np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-12)


def test_fully_masked_row_is_rejected():
    with pytest.raises(MaskError):
        ops.softmax_masked(Tensor(np.zeros((2, 2))), np.array([[True, True], [False, True]]))


def test_broadcast_mismatch_names_both_shapes():
    with pytest.raises(ShapeMismatchError) as info:
        ops.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))
    assert info.value.left == (2, 3)
    assert info.value.right == (3, 2)
    with pytest.raises(ShapeMismatchError):
        ops.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros(3)))


def test_domain_and_axis_errors():
    with pytest.raises(DomainError):
        ops.log(Tensor([1.0, -1.0]))
    with pytest.raises(DomainError):
        ops.div(Tensor([1.0]), Tensor([0.0]))
    with pytest.raises(InvalidAxisError):
        ops.reduce("sum", Tensor(np.zeros((2, 2))), axis=2)
    with pytest.raises(DomainError):
        ops.elementwise("cosh", Tensor([1.0]))


def test_non_scalar_loss_is_rejected():
    x = parameter(np.ones((2, 2)))
    with Tape() as tape:
        y = ops.mul(x, 2.0)
    with pytest.raises(NonScalarLossError):
        backward(tape, y)


def test_operations_outside_tape_are_not_recorded():
    x = parameter(np.ones(3))
    y = ops.exp(x)
    assert y.is_leaf
    assert not y.requires_grad
    with Tape() as tape:
        ops.exp(x)
    assert len(tape) == 1


def test_gradients_accumulate_until_reset():
    x = parameter(np.array([2.0]))
    for _ in range(2):
        with Tape() as tape:
            loss = ops.reduce("sum", ops.mul(x, x))
        backward(tape, loss)
    np.testing.assert_allclose(x.grad, [8.0])
    x.zero_grad()
    assert x.grad is None


def test_unreached_parameters_get_zero_gradient():
    used, unused = parameter(np.ones(2)), parameter(np.ones(3))
    with Tape() as tape:
        loss = ops.reduce("sum", used)
    backward(tape, loss, [used, unused])
    np.testing.assert_array_equal(unused.grad, np.zeros(3))


def test_grad_check_rejects_bad_step():
    x = parameter(np.ones(1))
    with pytest.raises(DomainError):
        grad_check(lambda: ops.reduce("sum", x), [x], h=1e-1)
