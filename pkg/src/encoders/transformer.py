"""
Трансформер кодер-декодер для извлечения вектора контекста.

Кодер: входная проекция -> позиционное кодирование -> слои
(причинное самовнимание + FFN, остаточные связи, LayerNorm после сложения).
Декодер получает выход кодера со сдвигом на одну позицию (первый вход -
обучаемый стартовый токен), в каждом слое добавляется перекрестное внимание
на выход кодера. Последний токен декодера проецируется в embed_dim.
"""
from typing import Optional

import numpy as np

from config import constants as C
from src.core.errors import DimensionError
from src.diffcore import Linear, Module, Tensor, as_tensor, ops
from .base_encoder import Encoder, EncoderConfig, LayerNorm, default_rng, last_token


def positional_encoding(seq_len: int, model_dim: int, base: float = C.POSITIONAL_BASE) -> np.ndarray:
    """Синусоидальное кодирование (seq_len, model_dim): канал 2i - sin, 2i+1 - cos"""
    if seq_len < 1 or model_dim < 1:
        raise DimensionError(f"seq_len={seq_len}, model_dim={model_dim}")
    positions = np.arange(seq_len)[:, None]
    pair = np.arange(model_dim) // 2
    angles = positions / np.power(base, 2.0 * pair / model_dim)[None, :]
    return np.where(np.arange(model_dim) % 2 == 0, np.sin(angles), np.cos(angles))


def causal_mask(steps_q: int, steps_k: int) -> np.ndarray:
    """True - ключ в будущем относительно запроса"""
    return np.triu(np.ones((steps_q, steps_k), dtype=bool), k=1)


def scaled_dot_product_attention(q: Tensor, k: Tensor, v: Tensor, causal: bool = False) -> Tensor:
    """q (B, H, Tq, hd), k и v (B, H, Tk, hd) -> (B, H, Tq, hd)"""
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if k.shape[-2] != v.shape[-2]:
        raise DimensionError(f"число ключей {k.shape[-2]} != числу значений {v.shape[-2]}")
    head_dim = q.shape[-1]
    scores = ops.scale(ops.batched_matmul(q, ops.swap_last(k)), 1.0 / np.sqrt(head_dim))
    mask = causal_mask(q.shape[-2], k.shape[-2]) if causal else np.zeros(scores.shape[-2:], dtype=bool)
    weights = ops.softmax_masked(scores, mask)
    return ops.batched_matmul(weights, v)


class MultiHeadAttention(Module):
    def __init__(self, model_dim: int, n_heads: int, rng: np.random.Generator):
        super().__init__()
        if model_dim % n_heads:
            raise DimensionError(f"model_dim={model_dim} не делится на {n_heads} голов")
        self.model_dim = model_dim
        self.n_heads = n_heads
        self.head_dim = model_dim // n_heads
        self.query = self.add_module("query", Linear(model_dim, model_dim, rng))
        self.key = self.add_module("key", Linear(model_dim, model_dim, rng))
        self.value = self.add_module("value", Linear(model_dim, model_dim, rng))
        self.output = self.add_module("output", Linear(model_dim, model_dim, rng))

    def _split(self, x: Tensor) -> Tensor:
        batch, steps, _ = x.shape
        return ops.transpose(ops.reshape(x, (batch, steps, self.n_heads, self.head_dim)), (0, 2, 1, 3))

    def _merge(self, x: Tensor) -> Tensor:
        batch, _, steps, _ = x.shape
        return ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (batch, steps, self.model_dim))

    def forward(self, query: Tensor, key: Tensor, value: Tensor, causal: bool = False) -> Tensor:
        for tensor in (query, key, value):
            if tensor.ndim != 3 or tensor.shape[-1] != self.model_dim:
                raise DimensionError(f"ожидается (B, T, {self.model_dim}), форма {tensor.shape}")
        heads = scaled_dot_product_attention(self._split(self.query(query)), self._split(self.key(key)),
                                             self._split(self.value(value)), causal)
        return self.output(self._merge(heads))


def self_attention(attention: MultiHeadAttention, q: Tensor, k: Tensor, v: Tensor, causal: bool = False) -> Tensor:
    return attention(q, k, v, causal)


class FeedForward(Module):
    def __init__(self, model_dim: int, ff_dim: int, rng: np.random.Generator):
        super().__init__()
        self.expand = self.add_module("expand", Linear(model_dim, ff_dim, rng))
        self.contract = self.add_module("contract", Linear(ff_dim, model_dim, rng))

    def forward(self, x: Tensor) -> Tensor:
        return self.contract(ops.silu(self.expand(x)))


class EncoderLayer(Module):
    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        super().__init__()
        self.attention = self.add_module("attention", MultiHeadAttention(config.model_dim, config.n_heads, rng))
        self.norm1 = self.add_module("norm1", LayerNorm(config.model_dim))
        self.feed_forward = self.add_module("feed_forward", FeedForward(config.model_dim, config.ff_dim, rng))
        self.norm2 = self.add_module("norm2", LayerNorm(config.model_dim))

    def forward(self, x: Tensor) -> Tensor:
        x = self.norm1(ops.add(x, self_attention(self.attention, x, x, x, causal=True)))
        return self.norm2(ops.add(x, self.feed_forward(x)))


class DecoderLayer(Module):
    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        super().__init__()
        self.self_attention = self.add_module("self_attention",
                                              MultiHeadAttention(config.model_dim, config.n_heads, rng))
        self.norm1 = self.add_module("norm1", LayerNorm(config.model_dim))
        self.cross_attention = self.add_module("cross_attention",
                                               MultiHeadAttention(config.model_dim, config.n_heads, rng))
        self.norm2 = self.add_module("norm2", LayerNorm(config.model_dim))
        self.feed_forward = self.add_module("feed_forward", FeedForward(config.model_dim, config.ff_dim, rng))
        self.norm3 = self.add_module("norm3", LayerNorm(config.model_dim))

    def forward(self, x: Tensor, memory: Tensor) -> Tensor:
        x = self.norm1(ops.add(x, self_attention(self.self_attention, x, x, x, causal=True)))
        x = self.norm2(ops.add(x, self_attention(self.cross_attention, x, memory, memory)))
        return self.norm3(ops.add(x, self.feed_forward(x)))


class TransformerEncoder(Encoder):
    def __init__(self, config: EncoderConfig, rng: Optional[np.random.Generator] = None):
        super().__init__(config)
        rng = default_rng(config, rng)
        d = config.model_dim
        self.input_projection = self.add_module("input_projection", Linear(config.input_dim, d, rng))
        self.encoder_layers = [self.add_module(f"encoder{i}", EncoderLayer(config, rng))
                               for i in range(config.n_encoder_layers)]
        self.start_token = self.add_parameter("start_token", rng.normal(0.0, 0.02, (1, 1, d)))
        self.decoder_layers = [self.add_module(f"decoder{i}", DecoderLayer(config, rng))
                               for i in range(config.n_decoder_layers)]
        self.output_projection = self.add_module("output_projection", Linear(d, config.embed_dim, rng))

    def encode(self, observations) -> Tensor:
        """Выход кодера (B, R, model_dim); причинный по построению"""
        x = self.as_sequence_batch(observations)
        steps = x.shape[1]
        h = ops.add(self.input_projection(x), positional_encoding(steps, self.config.model_dim)[None])
        for layer in self.encoder_layers:
            h = layer(h)
        return h

    def embed(self, observations) -> Tensor:
        memory = self.encode(observations)
        batch, steps, d = memory.shape
        start = ops.mul(self.start_token, np.ones((batch, 1, 1)))
        if steps > 1:
            shifted = ops.concat([start, ops.slice_axis(memory, 1, 0, steps - 1)], axis=1)
        else:
            shifted = start
        h = ops.add(shifted, positional_encoding(steps, d)[None])
        for layer in self.decoder_layers:
            h = layer(h, memory)
        return self.output_projection(last_token(h))
