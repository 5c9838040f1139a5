from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.core.errors import CheckpointError, ShapeMismatchError
from . import ops
from .tensor import Tensor, parameter


class Module:
    """
    Базовый класс для всех обучаемых блоков.
    Параметры и подмодули регистрируются явно, порядок обхода детерминирован.
    """

    def __init__(self):
        self._parameters: Dict[str, Tensor] = {}
        self._modules: Dict[str, "Module"] = {}

    def add_parameter(self, name: str, value) -> Tensor:
        tensor = parameter(value, name=name)
        self._parameters[name] = tensor
        return tensor

    def add_module(self, name: str, module: "Module") -> "Module":
        self._modules[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._parameters.items():
            yield prefix + name, tensor
        for name, module in self._modules.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(tensor.size for tensor in self.parameters())

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """Строгая загрузка: имена и формы должны совпасть"""
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError("набор параметров не совпадает",
                                  expected=missing, actual=unexpected)
        for name, tensor in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(f"форма параметра {name}", expected=tensor.shape, actual=value.shape)
            tensor.data[...] = value

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


def uniform_fan_in(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """y = x W + b; x ранга 2 или 3 (последняя ось - признаки)"""

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None,
                 zero_init: bool = False, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        if zero_init or rng is None:
            weight = np.zeros((in_features, out_features))
        else:
            weight = uniform_fan_in(rng, in_features, (in_features, out_features))
        self.weight = self.add_parameter("weight", weight)
        self.bias = self.add_parameter("bias", np.zeros((1, out_features))) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeMismatchError(x.shape, self.weight.shape, "linear")
        lead = x.shape[:-1]
        flat = x if x.ndim == 2 else ops.reshape(x, (-1, self.in_features))
        out = ops.matmul(flat, self.weight)
        if self.bias is not None:
            out = ops.add(out, self.bias)
        if x.ndim != 2:
            out = ops.reshape(out, lead + (self.out_features,))
        return out
