"""
Обратимые преобразования потока. Каждое преобразование работает в направлении
данные -> шум:

    forward(x, context) -> (y, log|det dy/dx|)
    inverse(y, context) -> x

Слой потока = перестановка -> LU-линейный слой -> маскированный аффинный
авторегрессионный слой (MADE с контекстом).
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from config import constants as C
from src.core.errors import DimensionError, NonFiniteError, SingularLayerError
from src.diffcore import Module, Tensor, as_tensor, ops
from src.diffcore.module import uniform_fan_in


def _zeros_logdet(x: Tensor) -> Tensor:
    return Tensor(np.zeros(x.shape[0]))


class Permutation(Module):
    """Перестановка признаков; |det| = 1"""

    def __init__(self, order: Sequence[int]):
        super().__init__()
        order = np.asarray(order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(len(order))):
            raise DimensionError(f"{order.tolist()} не является перестановкой")
        self.order = order
        self.inverse_order = np.argsort(order)

    @classmethod
    def reverse(cls, features: int) -> "Permutation":
        return cls(np.arange(features)[::-1])

    @classmethod
    def random(cls, features: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(features))

    def forward(self, x: Tensor, context: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        return ops.take(x, self.order, axis=-1), _zeros_logdet(x)

    def inverse(self, y: np.ndarray, context: Optional[Tensor] = None) -> np.ndarray:
        return np.take(y, self.inverse_order, axis=-1)


class LULinear(Module):
    """
    y = x W^T + b, W = L U: L нижнетреугольная с единичной диагональю,
    U верхнетреугольная с диагональю exp(log_diag). log|det| = sum(log_diag).
    Инициализация тождественная.
    """

    def __init__(self, features: int):
        super().__init__()
        self.features = features
        self.lower_mask = np.tril(np.ones((features, features)), k=-1)
        self.upper_mask = np.triu(np.ones((features, features)), k=1)
        self.lower = self.add_parameter("lower", np.zeros((features, features)))
        self.upper = self.add_parameter("upper", np.zeros((features, features)))
        self.log_diag = self.add_parameter("log_diag", np.zeros((1, features)))
        self.bias = self.add_parameter("bias", np.zeros((1, features)))

    def weight(self) -> Tensor:
        eye = np.eye(self.features)
        lower = ops.add(ops.mul(self.lower, self.lower_mask), eye)
        upper = ops.add(ops.mul(self.upper, self.upper_mask), ops.mul(ops.exp(self.log_diag), eye))
        return ops.matmul(lower, upper)

    def forward(self, x: Tensor, context: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        y = ops.add(ops.matmul(x, ops.transpose(self.weight())), self.bias)
        return y, ops.reduce("sum", self.log_diag)

    def determinant_witness(self) -> float:
        return float(np.exp(self.log_diag.data.sum()))

    def inverse(self, y: np.ndarray, context: Optional[Tensor] = None) -> np.ndarray:
        witness = self.determinant_witness()
        if not witness > C.DET_WITNESS:
            raise SingularLayerError(f"|det W| = {witness:.3e} <= {C.DET_WITNESS}")
        eye = np.eye(self.features)
        lower = self.lower.data * self.lower_mask + eye
        upper = self.upper.data * self.upper_mask + np.diag(np.exp(self.log_diag.data[0]))
        # x W^T = y - b  =>  L U x^T = (y - b)^T
        rhs = (y - self.bias.data).T
        solved = solve_triangular(lower, rhs, lower=True, unit_diagonal=True)
        return solve_triangular(upper, solved, lower=False).T


def made_degrees(features: int, hidden: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Степени входов 1..d и скрытых нейронов 0..d-1 (по кругу).
    Нейроны степени 0 видят только контекст.
    """
    return np.arange(1, features + 1), np.arange(hidden) % features


class MaskedAffineAutoregressive(Module):
    """
    z_i = x_i exp(s_i) + t_i, где (s_i, t_i) зависят только от x_{<i} и контекста.
    s = bound * tanh(raw / bound). Выходной слой инициализирован нулями,
    поэтому необученный слой тождественен.
    """

    def __init__(self, features: int, hidden_features: int, context_features: int = 0,
                 rng: Optional[np.random.Generator] = None,
                 log_scale_bound: float = C.LOG_SCALE_BOUND):
        super().__init__()
        rng = rng or np.random.default_rng(C.GLOBAL_SEED)
        self.features = features
        self.hidden_features = hidden_features
        self.context_features = context_features
        self.log_scale_bound = log_scale_bound

        in_deg, hidden_deg = made_degrees(features, hidden_features)
        out_deg = np.concatenate([in_deg, in_deg])
        self.input_mask = (in_deg[:, None] <= hidden_deg[None, :]).astype(np.float64)
        self.hidden_mask = (hidden_deg[:, None] <= hidden_deg[None, :]).astype(np.float64)
        self.output_mask = (hidden_deg[:, None] < out_deg[None, :]).astype(np.float64)

        h = hidden_features
        fan_in = features + context_features
        self.w_in = self.add_parameter("w_in", uniform_fan_in(rng, fan_in, (features, h)))
        self.w_context = (self.add_parameter("w_context", uniform_fan_in(rng, fan_in, (context_features, h)))
                          if context_features > 0 else None)
        self.b_in = self.add_parameter("b_in", np.zeros((1, h)))
        self.w_hidden = self.add_parameter("w_hidden", uniform_fan_in(rng, h, (h, h)))
        self.b_hidden = self.add_parameter("b_hidden", np.zeros((1, h)))
        self.w_out = self.add_parameter("w_out", np.zeros((h, 2 * features)))
        self.b_out = self.add_parameter("b_out", np.zeros((1, 2 * features)))

    def conditioner(self, x: Tensor, context: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        """(сдвиг t, log-масштаб s) формы (n, d)"""
        pre = ops.matmul(x, ops.mul(self.w_in, self.input_mask))
        if self.w_context is not None:
            if context is None:
                raise DimensionError("условному слою не передан контекст")
            pre = ops.add(pre, ops.matmul(context, self.w_context))
        hidden = ops.tanh(ops.add(pre, self.b_in))
        hidden = ops.tanh(ops.add(ops.matmul(hidden, ops.mul(self.w_hidden, self.hidden_mask)), self.b_hidden))
        out = ops.add(ops.matmul(hidden, ops.mul(self.w_out, self.output_mask)), self.b_out)
        d = self.features
        shift = ops.slice_axis(out, -1, 0, d)
        raw = ops.slice_axis(out, -1, d, 2 * d)
        bound = self.log_scale_bound
        log_scale = ops.scale(ops.tanh(ops.scale(raw, 1.0 / bound)), bound)
        return shift, log_scale

    def forward(self, x: Tensor, context: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        shift, log_scale = self.conditioner(x, context)
        z = ops.add(ops.mul(x, ops.exp(log_scale)), shift)
        return z, ops.reduce("sum", log_scale, axis=1)

    def inverse(self, z: np.ndarray, context: Optional[Tensor] = None) -> np.ndarray:
        # d последовательных проходов: x_i зависит от уже найденных x_{<i}
        x = np.zeros_like(z)
        for i in range(self.features):
            shift, log_scale = self.conditioner(Tensor(x), context)
            x[:, i] = (z[:, i] - shift.data[:, i]) * np.exp(-log_scale.data[:, i])
        return x


class FlowLayer(Module):
    """Композиция преобразований; один элемент f_l в списке выходов слоев"""

    def __init__(self, transforms: List[Module]):
        super().__init__()
        self.transforms = transforms
        for index, transform in enumerate(transforms):
            self.add_module(str(index), transform)

    @classmethod
    def standard(cls, features: int, hidden_features: int, context_features: int,
                 permutation: Permutation, rng: np.random.Generator,
                 log_scale_bound: float = C.LOG_SCALE_BOUND) -> "FlowLayer":
        return cls([
            permutation,
            LULinear(features),
            MaskedAffineAutoregressive(features, hidden_features, context_features, rng, log_scale_bound),
        ])

    def forward(self, x: Tensor, context: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
        log_det = _zeros_logdet(x)
        for transform in self.transforms:
            x, step = transform(x, context)
            log_det = ops.add(log_det, step)
        return x, log_det

    def inverse(self, y: np.ndarray, context: Optional[Tensor] = None) -> np.ndarray:
        for transform in reversed(self.transforms):
            y = transform.inverse(y, context)
        return y


def check_finite(values: Tensor, where: str):
    data = values.data
    if not np.all(np.isfinite(data)):
        rows = np.flatnonzero(~np.isfinite(data.reshape(len(data), -1)).all(axis=1))
        raise NonFiniteError("неконечный выход потока", where=where, indices=rows.tolist())


def as_batch(x, features: int, label: str) -> Tensor:
    x = as_tensor(x)
    if x.ndim == 1:
        x = Tensor(x.data[None, :]) if not x.requires_grad else ops.reshape(x, (1, -1))
    if x.ndim != 2 or x.shape[1] != features:
        raise DimensionError(f"{label}: ожидается размерность {features}, форма {x.shape}")
    return x
