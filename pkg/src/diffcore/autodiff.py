import logging
from typing import Callable, Dict, Iterable, Optional

import numpy as np

from src.core.errors import DomainError, NonScalarLossError
from .tensor import Tape, Tensor

logger = logging.getLogger(__name__)


def backward(tape: Tape, loss: Tensor, params: Optional[Iterable[Tensor]] = None):
    """
    Обратный проход по ленте. Градиенты листьев накапливаются в .grad
    (повторный вызов без сброса суммирует). Параметры из params,
    до которых граф не дошел, получают нулевой градиент.
    """
    if loss.size != 1:
        raise NonScalarLossError(f"loss должен быть скаляром, форма {loss.shape}")

    seed = np.ones_like(loss.data)
    pending: Dict[int, np.ndarray] = {}
    if loss.is_leaf:
        if loss.requires_grad:
            loss.grad = seed.copy() if loss.grad is None else loss.grad + seed
    else:
        pending[loss.node_id] = seed

    for operation in reversed(tape.operations):
        grad = pending.pop(operation.output.node_id, None)
        if grad is None:
            continue
        input_grads = operation.backward(grad)
        for tensor, tensor_grad in zip(operation.inputs, input_grads):
            if tensor_grad is None or not tensor.requires_grad:
                continue
            if tensor.is_leaf:
                tensor.grad = tensor_grad.copy() if tensor.grad is None else tensor.grad + tensor_grad
            elif tensor.node_id in pending:
                pending[tensor.node_id] = pending[tensor.node_id] + tensor_grad
            else:
                pending[tensor.node_id] = tensor_grad

    if params is not None:
        for param in params:
            if param.grad is None:
                param.grad = np.zeros_like(param.data)


def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor], h: float = 1e-4) -> float:
    """
    Сравнивает аналитический градиент с центральными разностями.
    Возвращает max |analytic - numeric| / max(1, |numeric|).
    """
    params = list(params)
    if not params:
        return 0.0
    if not 1e-6 <= h <= 1e-3:
        raise DomainError(f"шаг h={h} вне диапазона [1e-6, 1e-3]")

    for param in params:
        param.zero_grad()
    with Tape() as tape:
        loss = f()
    backward(tape, loss, params)
    analytic = [param.grad.copy() for param in params]

    worst = 0.0
    for param, grad in zip(params, analytic):
        flat = param.data.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = f().item()
            flat[i] = original - h
            minus = f().item()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            error = abs(flat_grad[i] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, error)
    logger.debug(f"grad_check: {sum(p.size for p in params)} параметров, ошибка {worst:.3e}")
    return worst
