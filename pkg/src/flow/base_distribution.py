"""Базовые распределения потока: фиксированное и условное диагональное нормальное."""
from typing import Optional, Tuple

import numpy as np

from config import constants as C
from src.core.errors import DimensionError
from src.diffcore import Linear, Module, Tensor, ops

LOG_2PI = float(np.log(2.0 * np.pi))


def gaussian_log_prob(z: Tensor, mean: Tensor, log_std: Tensor) -> Tensor:
    """log N(z; mean, diag(exp(log_std))^2), суммируется по последней оси"""
    d = z.shape[-1]
    whitened = ops.mul(ops.sub(z, mean), ops.exp(ops.neg(log_std)))
    quad = ops.reduce("sum", ops.mul(whitened, whitened), axis=-1)
    log_norm = ops.reduce("sum", log_std, axis=-1)
    return ops.sub(ops.scale(quad, -0.5), ops.add(log_norm, 0.5 * d * LOG_2PI))


class DiagonalNormal(Module):
    """Фиксированное N(mean, diag(std^2)); без обучаемых параметров"""

    def __init__(self, features: int, mean=None, log_std=None):
        super().__init__()
        self.features = features
        self.context_features = 0
        self.mean = np.zeros(features) if mean is None else np.asarray(mean, dtype=np.float64)
        self.log_std = np.zeros(features) if log_std is None else np.asarray(log_std, dtype=np.float64)

    def base_params(self, context: Optional[Tensor], n: int) -> Tuple[Tensor, Tensor]:
        return (Tensor(np.tile(self.mean, (n, 1))), Tensor(np.tile(self.log_std, (n, 1))))


class ConditionalDiagonalNormal(Module):
    """
    2-слойный MLP: контекст -> (mu, log sigma).
    Выходной слой инициализирован нулями: mu = 0, sigma = 1 для любого контекста.
    """

    def __init__(self, features: int, context_features: int, hidden_features: int = C.FLOW_BASE_HIDDEN,
                 rng: Optional[np.random.Generator] = None, clamp: float = C.LOG_SIGMA_CLAMP):
        super().__init__()
        rng = rng or np.random.default_rng(C.GLOBAL_SEED)
        self.features = features
        self.context_features = context_features
        self.clamp = clamp
        self.hidden = self.add_module("hidden", Linear(context_features, hidden_features, rng))
        self.head = self.add_module("head", Linear(hidden_features, 2 * features, zero_init=True))

    def base_params(self, context: Optional[Tensor], n: int) -> Tuple[Tensor, Tensor]:
        if context is None or context.shape[-1] != self.context_features:
            shape = None if context is None else context.shape
            raise DimensionError(f"контекст базового распределения: ожидается {self.context_features}, форма {shape}")
        out = self.head(ops.tanh(self.hidden(context)))
        mean = ops.slice_axis(out, -1, 0, self.features)
        log_std = ops.clip(ops.slice_axis(out, -1, self.features, 2 * self.features), -self.clamp, self.clamp)
        return mean, log_std


def sample_base(mean: np.ndarray, log_std: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return mean + np.exp(log_std) * rng.standard_normal(mean.shape)
