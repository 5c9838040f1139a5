from typing import Optional

import numpy as np

from src.core.errors import ConfigError
from .base_encoder import Encoder, EncoderConfig


class EncoderFactory:
    """Создает оператор обусловливания по виду из конфигурации"""

    @staticmethod
    def create(config: EncoderConfig, rng: Optional[np.random.Generator] = None) -> Encoder:
        # Ленивый импорт
        if config.kind == "mlp":
            from .mlp import MlpEncoder
            return MlpEncoder(config, rng)
        elif config.kind == "transformer":
            from .transformer import TransformerEncoder
            return TransformerEncoder(config, rng)
        elif config.kind == "ssm":
            from .ssm import SsmEncoder
            return SsmEncoder(config, rng)
        else:
            raise ConfigError(f"неизвестный энкодер {config.kind!r}", fields=["kind"])

    @staticmethod
    def from_dict(data: dict, rng: Optional[np.random.Generator] = None) -> Encoder:
        """Восстанавливает энкодер по сохраненной конфигурации"""
        known = set(EncoderConfig.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError("неизвестные поля конфигурации энкодера", fields=unknown)
        return EncoderFactory.create(EncoderConfig(**data), rng)
