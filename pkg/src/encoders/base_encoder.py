import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from config import constants as C
from src.core.errors import ConfigError, DimensionError
from src.diffcore import Module, Tensor, as_tensor, ops

ENCODER_KINDS = ("mlp", "transformer", "ssm")


@dataclass
class EncoderConfig:
    kind: str = C.ENCODER_KIND
    input_dim: int = 2
    embed_dim: int = C.FLOW_CONTEXT_FEATURES
    window: int = C.WINDOW_LENGTH  # используется только MLP
    model_dim: int = C.ENCODER_MODEL_DIM
    n_encoder_layers: int = C.ENCODER_LAYERS
    n_decoder_layers: int = C.DECODER_LAYERS
    n_heads: int = C.ENCODER_HEADS
    ff_dim: int = C.ENCODER_FF_DIM
    ssm_state_dim: int = C.SSM_STATE_DIM
    conv_kernel_width: int = C.SSM_CONV_WIDTH
    expansion: int = C.SSM_EXPANSION
    ssm_depth: int = C.SSM_DEPTH
    mlp_hidden: int = C.MLP_HIDDEN
    seed: int = C.GLOBAL_SEED

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ConfigError(f"неизвестный энкодер {self.kind!r}", fields=["kind"])
        sizes = {name: value for name, value in asdict(self).items()
                 if isinstance(value, int) and name not in ("seed", "n_encoder_layers", "n_decoder_layers")}
        bad = [name for name, value in sizes.items() if value < 1]
        if self.n_encoder_layers < 0 or self.n_decoder_layers < 0:
            bad += ["n_encoder_layers/n_decoder_layers"]
        if bad:
            raise ConfigError("размеры должны быть >= 1", fields=bad)
        if self.model_dim % self.n_heads:
            raise ConfigError(f"model_dim={self.model_dim} не делится на n_heads={self.n_heads}",
                              fields=["model_dim", "n_heads"])

    def to_dict(self) -> Dict:
        return asdict(self)


class Encoder(Module):
    """
    Базовый класс операторов обусловливания: R наблюдений -> вектор контекста.
    embed принимает (R, m) или (B, R, m) и возвращает (B, embed_dim).
    """

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.config = config

    def as_sequence_batch(self, observations) -> Tensor:
        observations = as_tensor(observations)
        if observations.ndim == 2:
            observations = ops.reshape(observations, (1,) + observations.shape)
        if observations.ndim != 3 or observations.shape[-1] != self.config.input_dim:
            raise DimensionError(f"ожидаются наблюдения (B, R, {self.config.input_dim}), форма {observations.shape}")
        if observations.shape[1] < 1:
            raise DimensionError("пустое окно наблюдений")
        return observations

    def embed(self, observations) -> Tensor:
        raise NotImplementedError

    def forward(self, observations) -> Tensor:
        return self.embed(observations)


class LayerNorm(Module):
    """Нормализация по последней оси с обучаемыми gamma, beta (форма (1, 1, D))"""

    def __init__(self, features: int, eps: float = C.NORM_EPS):
        super().__init__()
        self.eps = eps
        self.gamma = self.add_parameter("gamma", np.ones((1, 1, features)))
        self.beta = self.add_parameter("beta", np.zeros((1, 1, features)))

    def forward(self, x: Tensor) -> Tensor:
        centered = ops.sub(x, ops.reduce("mean", x, axis=-1, keepdims=True))
        variance = ops.reduce("mean", ops.mul(centered, centered), axis=-1, keepdims=True)
        normed = ops.mul(centered, ops.power(ops.add(variance, self.eps), -0.5))
        return ops.add(ops.mul(normed, self.gamma), self.beta)


class RMSNorm(Module):
    def __init__(self, features: int, eps: float = C.NORM_EPS):
        super().__init__()
        self.eps = eps
        self.gamma = self.add_parameter("gamma", np.ones((1, 1, features)))

    def forward(self, x: Tensor) -> Tensor:
        mean_square = ops.reduce("mean", ops.mul(x, x), axis=-1, keepdims=True)
        return ops.mul(ops.mul(x, ops.power(ops.add(mean_square, self.eps), -0.5)), self.gamma)


def last_token(x: Tensor) -> Tensor:
    """(B, T, D) -> (B, D)"""
    batch, steps, features = x.shape
    return ops.reshape(ops.slice_axis(x, 1, steps - 1, steps), (batch, features))


def default_rng(config: EncoderConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng or np.random.default_rng(config.seed)
