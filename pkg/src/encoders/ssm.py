"""
Селективная модель пространства состояний (блок в стиле Mamba).

Непрерывная система h' = A h + B x дискретизируется фиксатором нулевого
порядка с шагом Delta, который вместе с B и C зависит от входного токена:

    A_bar = exp(Delta A)
    B_bar = (Delta A)^-1 (exp(Delta A) - 1) Delta B = exprel(Delta A) Delta B
    h_t = A_bar_t h_{t-1} + B_bar_t x_t,   y_t = C_t h_t,   h_0 = 0

A диагональна: для каждого канала E хранится N собственных значений.
"""
from typing import Optional, Tuple

import numpy as np

from config import constants as C
from src.core.errors import DimensionError, DomainError, NonFiniteError
from src.diffcore import Linear, Module, Tensor, as_tensor, ops
from .base_encoder import Encoder, EncoderConfig, RMSNorm, default_rng, last_token

# Диапазон начальных шагов Delta
_DT_MIN, _DT_MAX = 1e-3, 1e-1


def zoh_discretize(A, B, delta) -> Tuple[Tensor, Tensor]:
    """
    (A_bar, B_bar) для диагональной A; операнды транслируются поэлементно.
    При Delta A -> 0 exprel дает предел B_bar -> Delta B.
    """
    A, B, delta = as_tensor(A), as_tensor(B), as_tensor(delta)
    if np.any(delta.data <= 0.0):
        raise DomainError("шаг Delta должен быть положительным")
    scaled = ops.mul(delta, A)
    return ops.exp(scaled), ops.mul(ops.mul(ops.exprel(scaled), delta), B)


def recurrent_scan(a_bar, bx, c) -> Tensor:
    """
    Линейная рекуррентность по оси времени.
    a_bar, bx: (B, T, E, N); c: (B, T, 1, N) -> y: (B, T, E)
    """
    a_bar, bx, c = as_tensor(a_bar), as_tensor(bx), as_tensor(c)
    batch, steps, channels, state = a_bar.shape
    h = Tensor(np.zeros((batch, channels, state)))
    outputs = []
    for t in range(steps):
        a_t = ops.reshape(ops.slice_axis(a_bar, 1, t, t + 1), (batch, channels, state))
        bx_t = ops.reshape(ops.slice_axis(bx, 1, t, t + 1), (batch, channels, state))
        c_t = ops.reshape(ops.slice_axis(c, 1, t, t + 1), (batch, 1, state))
        h = ops.add(ops.mul(a_t, h), bx_t)
        if not np.all(np.isfinite(h.data)):
            raise NonFiniteError("переполнение состояния SSM", where=f"шаг {t}")
        y_t = ops.reduce("sum", ops.mul(h, c_t), axis=-1)
        outputs.append(ops.reshape(y_t, (batch, 1, channels)))
    return ops.concat(outputs, axis=1)


def selective_scan(x, delta, A, B, C) -> Tensor:
    """
    x, delta: (B, T, E); A: (E, N); B, C: (B, T, N) -> y: (B, T, E).
    Параметры выбираются для каждого токена (зависят от входа).
    """
    x, delta, A, B, C = (as_tensor(v) for v in (x, delta, A, B, C))
    batch, steps, channels = x.shape
    state = A.shape[-1]
    if delta.shape != x.shape or A.shape[0] != channels or B.shape != (batch, steps, state) \
            or C.shape != B.shape:
        raise DimensionError(f"формы x {x.shape}, delta {delta.shape}, A {A.shape}, B {B.shape}, C {C.shape}")
    delta4 = ops.reshape(delta, (batch, steps, channels, 1))
    a_bar, b_bar = zoh_discretize(ops.reshape(A, (1, 1, channels, state)),
                                  ops.reshape(B, (batch, steps, 1, state)), delta4)
    bx = ops.mul(b_bar, ops.reshape(x, (batch, steps, channels, 1)))
    return recurrent_scan(a_bar, bx, ops.reshape(C, (batch, steps, 1, state)))


def _inverse_softplus(y: np.ndarray) -> np.ndarray:
    return y + np.log(-np.expm1(-y))


class CausalDepthwiseConv(Module):
    """Свертка по времени для каждого канала отдельно, дополнение слева K-1 нулями"""

    def __init__(self, channels: int, width: int, rng: np.random.Generator):
        super().__init__()
        self.channels = channels
        self.width = width
        bound = 1.0 / np.sqrt(width)
        self.weight = self.add_parameter("weight", rng.uniform(-bound, bound, (width, channels)))
        self.bias = self.add_parameter("bias", np.zeros((1, 1, channels)))

    def forward(self, x: Tensor) -> Tensor:
        batch, steps, channels = x.shape
        padded = ops.concat([Tensor(np.zeros((batch, self.width - 1, channels))), x], axis=1) \
            if self.width > 1 else x
        out = self.bias
        for k in range(self.width):
            tap = ops.reshape(ops.slice_axis(self.weight, 0, k, k + 1), (1, 1, channels))
            out = ops.add(out, ops.mul(ops.slice_axis(padded, 1, k, k + steps), tap))
        return out


class SelectiveSsmBlock(Module):
    """
    Проекция на две ветви: основная (свертка -> SiLU -> селективный скан),
    затвор (проекция -> SiLU); произведение -> выходная проекция ->
    остаточная связь -> RMS-нормализация.
    """

    def __init__(self, model_dim: int, expansion: int, state_dim: int, conv_width: int,
                 rng: np.random.Generator):
        super().__init__()
        inner = model_dim * expansion
        self.inner = inner
        self.state_dim = state_dim
        self.main_projection = self.add_module("main_projection", Linear(model_dim, inner, rng))
        self.gate_projection = self.add_module("gate_projection", Linear(model_dim, inner, rng))
        self.conv = self.add_module("conv", CausalDepthwiseConv(inner, conv_width, rng))
        self.delta_projection = self.add_module("delta_projection", Linear(inner, inner, rng))
        dt = np.exp(rng.uniform(np.log(_DT_MIN), np.log(_DT_MAX), (1, inner)))
        self.delta_projection.bias.data[...] = _inverse_softplus(dt)
        self.b_projection = self.add_module("b_projection", Linear(inner, state_dim, rng))
        self.c_projection = self.add_module("c_projection", Linear(inner, state_dim, rng))
        # A = -exp(A_log), модули собственных значений 1..N
        self.a_log = self.add_parameter("a_log", np.log(np.tile(np.arange(1, state_dim + 1, dtype=np.float64),
                                                                (inner, 1))))
        self.skip = self.add_parameter("skip", np.ones((1, 1, inner)))
        self.output_projection = self.add_module("output_projection", Linear(inner, model_dim, rng))
        self.norm = self.add_module("norm", RMSNorm(model_dim))

    def forward(self, u: Tensor) -> Tensor:
        x = ops.silu(self.conv(self.main_projection(u)))
        delta = ops.softplus(self.delta_projection(x))
        A = ops.neg(ops.exp(self.a_log))
        y = selective_scan(x, delta, A, self.b_projection(x), self.c_projection(x))
        y = ops.add(y, ops.mul(x, self.skip))
        gated = ops.mul(y, ops.silu(self.gate_projection(u)))
        return self.norm(ops.add(self.output_projection(gated), u))


class SsmEncoder(Encoder):
    def __init__(self, config: EncoderConfig, rng: Optional[np.random.Generator] = None):
        super().__init__(config)
        rng = default_rng(config, rng)
        self.input_projection = self.add_module("input_projection", Linear(config.input_dim, config.model_dim, rng))
        self.blocks = [self.add_module(f"block{i}", SelectiveSsmBlock(config.model_dim, config.expansion,
                                                                      config.ssm_state_dim,
                                                                      config.conv_kernel_width, rng))
                       for i in range(config.ssm_depth)]
        self.output_projection = self.add_module("output_projection",
                                                 Linear(config.model_dim, config.embed_dim, rng))

    def token_states(self, observations) -> Tensor:
        """Представления токенов (B, R, model_dim) до выбора последнего"""
        h = self.input_projection(self.as_sequence_batch(observations))
        for block in self.blocks:
            h = block(h)
        return h

    def embed(self, observations) -> Tensor:
        return self.output_projection(last_token(self.token_states(observations)))
