from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import constants as C
from src.core.errors import ConfigError, ShapeMismatchError
from src.diffcore import Tensor
from .losses import LossWeights


@dataclass
class TrainConfig:
    iterations: int = C.TRAIN_ITERATIONS
    batch_size: int = C.TRAIN_BATCH_SIZE
    learning_rate: float = C.LEARNING_RATE
    beta1: float = C.ADAM_BETA1
    beta2: float = C.ADAM_BETA2
    eps: float = C.ADAM_EPS
    clip_norm: Optional[float] = C.GRAD_CLIP_NORM  # None или 0 - без ограничения
    seed: int = C.GLOBAL_SEED
    weights: LossWeights = field(default_factory=LossWeights)
    log_every: int = C.LOG_EVERY
    record_wallclock: bool = True

    def __post_init__(self):
        bad = []
        if self.iterations < 0:
            bad.append("iterations")
        if self.batch_size < 1:
            bad.append("batch_size")
        if not self.learning_rate > 0:
            bad.append("learning_rate")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            bad.append("beta1/beta2")
        if bad:
            raise ConfigError("некорректные параметры обучения", fields=bad)


@dataclass
class AdamState:
    step: int
    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]

    @classmethod
    def zeros(cls, params: Sequence[Tensor]) -> "AdamState":
        return cls(0, [np.zeros_like(p.data) for p in params], [np.zeros_like(p.data) for p in params])


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_gradients(grads: Sequence[np.ndarray], max_norm: Optional[float]) -> Tuple[List[np.ndarray], float]:
    """Масштабирует градиенты так, чтобы общая норма не превышала max_norm"""
    norm = global_norm(grads)
    if max_norm and norm > max_norm:
        factor = max_norm / norm
        return [g * factor for g in grads], norm
    return list(grads), norm


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState,
              config: TrainConfig) -> Tuple[AdamState, float]:
    """Шаг Adam с поправкой смещения; параметры обновляются на месте. Возвращает норму до обрезки."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeMismatchError((len(params),), (len(grads), len(state.first_moment)), "adam_step")
    grads, norm = clip_gradients(grads, config.clip_norm)
    step = state.step + 1
    correction1 = 1.0 - config.beta1 ** step
    correction2 = 1.0 - config.beta2 ** step
    for param, grad, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if grad.shape != param.shape:
            raise ShapeMismatchError(param.shape, grad.shape, "adam_step")
        m *= config.beta1
        m += (1.0 - config.beta1) * grad
        v *= config.beta2
        v += (1.0 - config.beta2) * grad * grad
        param.data -= config.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + config.eps)
    state.step = step
    return state, norm
