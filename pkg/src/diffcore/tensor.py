"""
Тензор и лента операций для обратного дифференцирования.

Лента строится заново на каждый прямой проход:

    with Tape() as tape:
        loss = ...
    backward(tape, loss)

Вне активной ленты операции не записываются (режим вывода).
"""
import itertools
import threading
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

_node_counter = itertools.count()
_local = threading.local()


def _tape_stack() -> List["Tape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape() -> Optional["Tape"]:
    """Текущая лента этого потока или None"""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Operation(NamedTuple):
    kind: str
    inputs: Tuple["Tensor", ...]
    output: "Tensor"
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """Упорядоченный список записанных операций (топологический порядок)"""

    def __init__(self):
        self.operations: List[Operation] = []

    def record(self, operation: Operation):
        self.operations.append(operation)

    def __len__(self):
        return len(self.operations)

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False


class Tensor:
    """Плотный массив float64 с опциональным градиентом"""

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self.node_id = next(_node_counter)
        self._producer: Optional[Operation] = None

    # Форма
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._producer is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        label = f" '{self.name}'" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    # Арифметика (ленивый импорт - ops зависит от Tensor)
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __pow__(self, exponent: float):
        from . import ops
        return ops.power(self, exponent)

    def __matmul__(self, other):
        from . import ops
        if self.ndim == 2 and other.ndim == 2:
            return ops.matmul(self, other)
        return ops.batched_matmul(self, other)

    def exp(self):
        from . import ops
        return ops.exp(self)

    def log(self):
        from . import ops
        return ops.log(self)

    def tanh(self):
        from . import ops
        return ops.tanh(self)

    def sum(self, axis=None, keepdims=False):
        from . import ops
        return ops.reduce("sum", self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import ops
        return ops.reduce("mean", self, axis, keepdims)

    def max(self, axis=None, keepdims=False):
        from . import ops
        return ops.reduce("max", self, axis, keepdims)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops
        return ops.transpose(self, axes or None)


def as_tensor(value) -> Tensor:
    """Оборачивает константу (число, массив) в тензор без градиента"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)
