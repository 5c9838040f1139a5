from typing import Optional

import numpy as np

from src.core.errors import WindowLengthError
from src.diffcore import Linear, Tensor, ops
from .base_encoder import Encoder, EncoderConfig, default_rng


class MlpEncoder(Encoder):
    """Базовый вариант: окно разворачивается в вектор, 2 скрытых слоя SiLU. Длина окна фиксирована."""

    def __init__(self, config: EncoderConfig, rng: Optional[np.random.Generator] = None):
        super().__init__(config)
        rng = default_rng(config, rng)
        flat = config.window * config.input_dim
        self.hidden1 = self.add_module("hidden1", Linear(flat, config.mlp_hidden, rng))
        self.hidden2 = self.add_module("hidden2", Linear(config.mlp_hidden, config.mlp_hidden, rng))
        self.output = self.add_module("output", Linear(config.mlp_hidden, config.embed_dim, rng))

    def embed(self, observations) -> Tensor:
        x = self.as_sequence_batch(observations)
        batch, steps, features = x.shape
        if steps != self.config.window:
            raise WindowLengthError(f"MLP настроен на R={self.config.window}, получено R={steps}")
        h = ops.reshape(x, (batch, steps * features))
        h = ops.silu(self.hidden1(h))
        h = ops.silu(self.hidden2(h))
        return self.output(h)
