import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config import constants as C
from src.core.errors import DimensionError, DomainError
from src.diffcore import Module, Tensor, as_tensor, ops
from .base_distribution import ConditionalDiagonalNormal, DiagonalNormal, gaussian_log_prob, sample_base
from .layers import FlowLayer, Permutation, as_batch, check_finite

RandomSource = Union[int, np.random.Generator]


@dataclass
class FlowConfig:
    data_dim: int
    n_layers: int = C.FLOW_LAYERS
    hidden_features: int = C.FLOW_HIDDEN_FEATURES
    context_features: int = C.FLOW_CONTEXT_FEATURES
    base_hidden: int = C.FLOW_BASE_HIDDEN
    log_scale_bound: float = C.LOG_SCALE_BOUND
    seed: int = C.GLOBAL_SEED

    def __post_init__(self):
        if self.data_dim < 1:
            raise DimensionError(f"data_dim={self.data_dim} < 1")
        if self.n_layers < 0 or self.hidden_features < 1 or self.context_features < 0:
            raise DomainError(f"некорректная конфигурация потока: {self}")

    @property
    def conditional(self) -> bool:
        return self.context_features > 0

    def to_dict(self) -> Dict:
        return asdict(self)


class DensityValue(NamedTuple):
    log_prob: Tensor
    per_layer_outputs: List[Tensor]
    z: Tensor
    log_det: Tensor


def _rng(source: RandomSource) -> np.random.Generator:
    return source if isinstance(source, np.random.Generator) else np.random.default_rng(source)


class FlowModel(Module):
    """
    Условный маскированный авторегрессионный поток.
    Слои применяются в направлении данные -> шум: x -> f_1(x) -> ... -> f_L(x) = z.
    Контекст подается в базовое распределение и в каждый авторегрессионный слой.
    """

    def __init__(self, config: FlowConfig, rng: Optional[np.random.Generator] = None,
                 layers: Optional[Sequence[Module]] = None, base: Optional[Module] = None):
        super().__init__()
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.config = config
        rng = rng or np.random.default_rng(config.seed)
        d = config.data_dim

        if layers is None:
            layers = []
            for index in range(config.n_layers):
                # перестановки восстанавливаются по seed конфигурации, в контрольную точку не пишутся
                permutation = (Permutation.reverse(d) if d <= 2
                               else Permutation.random(d, np.random.default_rng([config.seed, 0xF1, index])))
                layers.append(FlowLayer.standard(d, config.hidden_features, config.context_features,
                                                 permutation, rng, config.log_scale_bound))
        self.layers = list(layers)
        for index, layer in enumerate(self.layers):
            self.add_module(f"layer{index}", layer)

        if base is None:
            base = (ConditionalDiagonalNormal(d, config.context_features, config.base_hidden, rng)
                    if config.conditional else DiagonalNormal(d))
        self.base = self.add_module("base", base)
        self.logger.debug(f"Поток: {len(self.layers)} слоев, d={d}, контекст {config.context_features}, "
                          f"{self.num_parameters()} параметров")

    @property
    def data_dim(self) -> int:
        return self.config.data_dim

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def _context(self, context, n: int) -> Optional[Tensor]:
        if not self.config.conditional:
            return None
        if context is None:
            raise DimensionError("условному потоку не передан контекст")
        context = as_batch(context, self.config.context_features, "контекст")
        if context.shape[0] == 1 and n > 1:
            context = Tensor(np.tile(context.data, (n, 1))) if not context.requires_grad else \
                ops.mul(context, np.ones((n, 1)))
        if context.shape[0] != n:
            raise DimensionError(f"контекст на {context.shape[0]} строк, данные на {n}")
        return context

    def forward_map(self, x, context=None) -> Tuple[Tensor, Tensor, List[Tensor]]:
        x = as_batch(x, self.data_dim, "данные")
        context = self._context(context, x.shape[0])
        log_det = Tensor(np.zeros(x.shape[0]))
        outputs = []
        for index, layer in enumerate(self.layers):
            x, step = layer(x, context)
            check_finite(x, f"слой {index}")
            log_det = ops.add(log_det, step)
            outputs.append(x)
        return x, log_det, outputs

    def inverse_map(self, z, context=None) -> np.ndarray:
        z = np.atleast_2d(np.asarray(as_tensor(z).data, dtype=np.float64))
        if z.shape[1] != self.data_dim:
            raise DimensionError(f"латентные точки: ожидается размерность {self.data_dim}, форма {z.shape}")
        context = self._context(context, z.shape[0])
        x = z
        for layer in reversed(self.layers):
            x = layer.inverse(x, context)
        return x

    def base_params(self, context=None, n: int = 1) -> Tuple[Tensor, Tensor]:
        if self.config.conditional:
            context = as_batch(context, self.config.context_features, "контекст")
            n = context.shape[0]
        return self.base.base_params(context, n)

    def log_prob(self, x, context=None) -> DensityValue:
        """log p(x) = log N(z; mu(c), sigma(c)) + log|det dz/dx|"""
        z, log_det, outputs = self.forward_map(x, context)
        mean, log_std = self.base.base_params(self._context(context, z.shape[0]), z.shape[0])
        log_prob = ops.add(gaussian_log_prob(z, mean, log_std), log_det)
        return DensityValue(log_prob, outputs, z, log_det)

    def sample(self, n: int, context=None, seed: RandomSource = C.GLOBAL_SEED) -> Tuple[np.ndarray, np.ndarray]:
        """n выборок при одном контексте (или по строке контекста на выборку)"""
        if n < 1:
            raise DomainError(f"n={n} < 1")
        context = self._context(context, n)
        mean, log_std = self.base.base_params(context, n)
        z = sample_base(mean.data, log_std.data, _rng(seed))
        x = self.inverse_map(z, context)
        return x, self.log_prob(x, context).log_prob.data.copy()

    def confidence_contours(self, context=None, levels: Sequence[int] = C.CONTOUR_LEVELS,
                            n_points: int = C.CONTOUR_POINTS) -> Dict[int, np.ndarray]:
        """Образы окружностей радиуса k в отбеленных координатах базы; ломаные замкнуты"""
        if self.data_dim != 2:
            raise DimensionError(f"контуры строятся только для d=2, d={self.data_dim}")
        angles = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
        circle = np.column_stack([np.cos(angles), np.sin(angles)])
        context = self._context(context, 1)
        mean, log_std = self.base.base_params(context, 1)
        contours = {}
        for level in levels:
            z = mean.data + np.exp(log_std.data) * level * circle
            ctx = None if context is None else Tensor(np.tile(context.data, (n_points, 1)))
            polyline = self.inverse_map(z, ctx)
            contours[int(level)] = np.vstack([polyline, polyline[:1]])
        return contours

    def layer_paths(self, x, context=None) -> np.ndarray:
        """Выходы всех слоев (L, n, d) для графиков траекторий слоев"""
        _, _, outputs = self.forward_map(x, context)
        if not outputs:
            return np.zeros((0,) + as_batch(x, self.data_dim, "данные").shape)
        return np.stack([o.data for o in outputs])

    def perturb(self, rng: np.random.Generator, scale: float = 0.1):
        """Случайный сдвиг всех параметров (для проверок на необученных потоках)"""
        for tensor in self.parameters():
            tensor.data += scale * rng.standard_normal(tensor.shape)
