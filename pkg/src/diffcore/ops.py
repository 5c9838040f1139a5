"""
Примитивы с точными аналитическими правилами обратного прохода.

Трансляция ограничена: операнды одного ранга, по каждой оси размеры равны
или один из них равен 1; плюс скаляры.
"""
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from src.core.errors import DomainError, InvalidAxisError, MaskError, ShapeMismatchError
from .tensor import Operation, Tensor, active_tape, as_tensor

ELEMENTWISE_KINDS = (
    "add", "sub", "mul", "div", "exp", "log", "tanh", "silu", "neg", "scale",
    "sigmoid", "softplus", "exprel",
)

_EXPREL_SERIES = 1e-2


def _make(kind: str, inputs: Sequence[Tensor], data: np.ndarray, backward) -> Tensor:
    """Создает выходной тензор и записывает операцию на активную ленту"""
    tape = active_tape()
    requires = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    if requires:
        op = Operation(kind, tuple(inputs), out, backward)
        out._producer = op
        tape.record(op)
    return out


def _broadcast_shape(left: Tuple[int, ...], right: Tuple[int, ...], kind: str) -> Tuple[int, ...]:
    if left == right:
        return left
    if len(left) == 0:
        return right
    if len(right) == 0:
        return left
    if len(left) != len(right):
        raise ShapeMismatchError(left, right, kind)
    shape = []
    for a, b in zip(left, right):
        if a == b or b == 1:
            shape.append(a)
        elif a == 1:
            shape.append(b)
        else:
            raise ShapeMismatchError(left, right, kind)
    return tuple(shape)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Суммирует градиент по осям, растянутым трансляцией"""
    if grad.shape == shape:
        return grad
    if len(shape) == 0:
        return np.asarray(grad.sum())
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    return grad.sum(axis=axes, keepdims=True)


def _binary(kind, a, b, forward, grad_a, grad_b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape, kind)
    data = forward(a.data, b.data)

    def backward(g):
        return (_unbroadcast(grad_a(g, a.data, b.data, data), a.shape),
                _unbroadcast(grad_b(g, a.data, b.data, data), b.shape))

    return _make(kind, (a, b), data, backward)


def add(a, b) -> Tensor:
    return _binary("add", a, b, np.add, lambda g, x, y, o: g, lambda g, x, y, o: g)


def sub(a, b) -> Tensor:
    return _binary("sub", a, b, np.subtract, lambda g, x, y, o: g, lambda g, x, y, o: -g)


def mul(a, b) -> Tensor:
    return _binary("mul", a, b, np.multiply,
                   lambda g, x, y, o: g * y, lambda g, x, y, o: g * x)


def div(a, b) -> Tensor:
    b = as_tensor(b)
    if np.any(b.data == 0.0):
        raise DomainError("деление на ноль")
    return _binary("div", a, b, np.divide,
                   lambda g, x, y, o: g / y, lambda g, x, y, o: -g * x / (y * y))


def _unary(kind, a, data, derivative) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        return (g * derivative(a.data, data),)

    return _make(kind, (a,), data, backward)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _unary("neg", a, -a.data, lambda x, o: -1.0)


def scale(a, constant: float) -> Tensor:
    a = as_tensor(a)
    return _unary("scale", a, a.data * constant, lambda x, o: constant)


def exp(a) -> Tensor:
    a = as_tensor(a)
    return _unary("exp", a, np.exp(a.data), lambda x, o: o)


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        bad = np.flatnonzero(a.data.reshape(-1) <= 0.0)[:5].tolist()
        raise DomainError(f"log от неположительного значения (позиции {bad})")
    return _unary("log", a, np.log(a.data), lambda x, o: 1.0 / x)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    return _unary("tanh", a, np.tanh(a.data), lambda x, o: 1.0 - o * o)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    return _unary("sigmoid", a, special.expit(a.data), lambda x, o: o * (1.0 - o))


def silu(a) -> Tensor:
    a = as_tensor(a)
    s = special.expit(a.data)
    return _unary("silu", a, a.data * s, lambda x, o: s * (1.0 + x * (1.0 - s)))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    return _unary("softplus", a, np.logaddexp(0.0, a.data), lambda x, o: special.expit(x))


def _exprel_derivative(x: np.ndarray, o: np.ndarray) -> np.ndarray:
    small = np.abs(x) < _EXPREL_SERIES
    safe = np.where(small, 1.0, x)
    exact = (np.exp(safe) * (safe - 1.0) + 1.0) / (safe * safe)
    series = 0.5 + x / 3.0 + x * x / 8.0 + x ** 3 / 30.0 + x ** 4 / 144.0
    return np.where(small, series, exact)


def exprel(a) -> Tensor:
    """(e^x - 1) / x с пределом 1 в нуле"""
    a = as_tensor(a)
    return _unary("exprel", a, special.exprel(a.data), _exprel_derivative)


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    if float(exponent) != int(exponent) and np.any(a.data < 0.0):
        raise DomainError(f"дробная степень {exponent} отрицательного значения")
    return _unary("power", a, a.data ** exponent,
                  lambda x, o: exponent * x ** (exponent - 1.0))


def clip(a, low: float, high: float) -> Tensor:
    a = as_tensor(a)
    inside = (a.data >= low) & (a.data <= high)
    return _unary("clip", a, np.clip(a.data, low, high), lambda x, o: inside.astype(np.float64))


def elementwise(op_kind: str, a, b=None) -> Tensor:
    """Единая точка входа для поэлементных операций"""
    binary = {"add": add, "sub": sub, "mul": mul, "div": div}
    unary = {"exp": exp, "log": log, "tanh": tanh, "silu": silu, "neg": neg,
             "sigmoid": sigmoid, "softplus": softplus, "exprel": exprel}
    if op_kind in binary:
        if b is None:
            raise DomainError(f"операция {op_kind} требует два операнда")
        return binary[op_kind](a, b)
    if op_kind == "scale":
        return scale(a, float(b))
    if op_kind in unary:
        return unary[op_kind](a)
    raise DomainError(f"неизвестная операция: {op_kind}")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(a.shape, b.shape, "matmul")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _make("matmul", (a, b), a.data @ b.data, backward)


def batched_matmul(a, b) -> Tensor:
    """Произведение по последним двум осям при совпадающих ведущих осях"""
    a, b = as_tensor(a), as_tensor(b)
    if (a.ndim < 3 or a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2]
            or a.shape[-1] != b.shape[-2]):
        raise ShapeMismatchError(a.shape, b.shape, "batched_matmul")

    def backward(g):
        return g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g

    return _make("batched_matmul", (a, b), np.matmul(a.data, b.data), backward)


def _check_axis(a: Tensor, axis: Optional[int]) -> Optional[int]:
    if axis is None:
        return None
    if not -a.ndim <= axis < a.ndim:
        raise InvalidAxisError(f"ось {axis} недопустима для формы {a.shape}")
    return axis % a.ndim


def reduce(op_kind: str, a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axis = _check_axis(a, axis)
    if op_kind == "sum":
        data = a.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            g = g if keepdims or axis is None else np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

    elif op_kind == "mean":
        count = a.size if axis is None else a.shape[axis]
        data = a.data.mean(axis=axis, keepdims=keepdims)

        def backward(g):
            g = g if keepdims or axis is None else np.expand_dims(g, axis)
            return (np.broadcast_to(g / count, a.shape).copy(),)

    elif op_kind == "max":
        data = a.data.max(axis=axis, keepdims=keepdims)

        def backward(g):
            # Градиент уходит в первый argmax (наименьший индекс)
            grad = np.zeros_like(a.data)
            if axis is None:
                grad.reshape(-1)[int(np.argmax(a.data))] = float(np.asarray(g).reshape(-1)[0])
                return (grad,)
            idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
            gk = g if keepdims else np.expand_dims(g, axis)
            np.put_along_axis(grad, idx, gk, axis=axis)
            return (grad,)

    else:
        raise DomainError(f"неизвестная редукция: {op_kind}")
    return _make(op_kind, (a,), np.asarray(data, dtype=np.float64), backward)


def l2norm(a, axis: int = -1) -> Tensor:
    """Евклидова норма вдоль оси; в нуле берется субградиент 0"""
    a = as_tensor(a)
    axis = _check_axis(a, axis)
    data = np.sqrt((a.data * a.data).sum(axis=axis))

    def backward(g):
        norm = np.expand_dims(data, axis)
        safe = np.where(norm > 0.0, norm, 1.0)
        ratio = np.where(norm > 0.0, a.data / safe, 0.0)
        return (ratio * np.expand_dims(g, axis),)

    return _make("l2norm", (a,), data, backward)


def softmax_masked(logits, mask) -> Tensor:
    """
    Softmax по последней оси. mask=True - элемент закрыт и получает вес ровно 0.
    Маска транслируется на форму logits (например (R, R) на (B, H, R, R)).
    """
    logits = as_tensor(logits)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), logits.shape)
    if np.any(mask.all(axis=-1)):
        rows = np.argwhere(mask.all(axis=-1))[:5].tolist()
        raise MaskError(f"строки полностью закрыты маской: {rows}")
    shifted = np.where(mask, -np.inf, logits.data)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    weights = np.where(mask, 0.0, np.exp(shifted))
    weights = weights / weights.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * weights).sum(axis=-1, keepdims=True)
        return (weights * (g - inner),)

    return _make("softmax_masked", (logits,), weights, backward)


def reshape(a, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError(a.shape, shape, "reshape")

    def backward(g):
        return (g.reshape(a.shape),)

    return _make("reshape", (a,), data, backward)


def transpose(a, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _make("transpose", (a,), np.transpose(a.data, axes), backward)


def swap_last(a) -> Tensor:
    a = as_tensor(a)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    axis = _check_axis(a, axis)
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward(g):
        grad = np.zeros_like(a.data)
        grad[index] = g
        return (grad,)

    return _make("slice", (a,), a.data[index], backward)


def concat(tensors: Sequence, axis: int) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = _check_axis(tensors[0], axis)
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim or any(
                s != r for i, (s, r) in enumerate(zip(t.shape, tensors[0].shape)) if i != axis):
            raise ShapeMismatchError(tensors[0].shape, t.shape, "concat")
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        return tuple(np.take(g, range(bounds[i], bounds[i + 1]), axis=axis)
                     for i in range(len(tensors)))

    return _make("concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), backward)


def take(a, indices: Sequence[int], axis: int = -1) -> Tensor:
    """Выбор элементов по индексам вдоль оси (перестановки)"""
    a = as_tensor(a)
    axis = _check_axis(a, axis)
    indices = np.asarray(indices, dtype=np.int64)

    def backward(g):
        grad = np.zeros(np.moveaxis(a.data, axis, 0).shape)
        np.add.at(grad, indices, np.moveaxis(g, axis, 0))
        return (np.moveaxis(grad, 0, axis),)

    return _make("take", (a,), np.take(a.data, indices, axis=axis), backward)
