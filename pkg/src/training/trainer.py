import logging
import time
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.errors import CheckpointError, DomainError, NonFiniteError
from src.diffcore import Tape, backward
from src.dynamics.windows import Normalizer, WindowedDataset
from src.encoders import Encoder, EncoderConfig, EncoderFactory
from src.flow import Checkpoint, FlowConfig, FlowModel
from .adam import AdamState, TrainConfig, adam_step
from .losses import total_loss
from .train_log import TrainLog


class Trainer:
    """
    Обучает поток вместе с энкодером: случайные пакеты с возвращением,
    total_loss -> обратный проход -> шаг Adam.
    """

    def __init__(self, flow: FlowModel, encoder: Optional[Encoder], config: TrainConfig):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.flow = flow
        self.encoder = encoder
        self.config = config
        self.params = flow.parameters() + (encoder.parameters() if encoder is not None else [])
        self.state = AdamState.zeros(self.params)
        self.rng = np.random.default_rng(config.seed)

    def step(self, dataset: WindowedDataset, indices: np.ndarray) -> Tuple[Dict[str, float], float]:
        for param in self.params:
            param.zero_grad()
        try:
            with Tape() as tape:
                loss, breakdown = total_loss(self.flow, self.encoder, dataset.batch(indices),
                                             self.config.weights)
        except NonFiniteError as e:
            offenders = indices[e.indices].tolist() if e.indices else indices.tolist()
            raise NonFiniteError(f"обучение остановлено на шаге {self.state.step + 1}",
                                 where=e.where, indices=offenders)
        if not np.isfinite(breakdown["total"]):
            raise NonFiniteError(f"неконечная функция потерь на шаге {self.state.step + 1}",
                                 where="total", indices=indices.tolist())
        backward(tape, loss, self.params)
        self.state, grad_norm = adam_step(self.params, [p.grad for p in self.params], self.state, self.config)
        return breakdown, grad_norm

    def train(self, dataset: WindowedDataset) -> TrainLog:
        if len(dataset) == 0:
            raise DomainError("пустой набор для обучения")
        log = TrainLog()
        config = self.config
        self.logger.info(f"Старт обучения: {config.iterations} итераций, пакет {config.batch_size}, "
                         f"lr={config.learning_rate}, веса {config.weights.to_dict()}, "
                         f"{len(self.params)} тензоров параметров")
        started = time.perf_counter()
        for iteration in range(1, config.iterations + 1):
            indices = self.rng.integers(0, len(dataset), config.batch_size)
            breakdown, grad_norm = self.step(dataset, indices)
            elapsed = (time.perf_counter() - started) * 1000.0 if config.record_wallclock else 0.0
            log.append(iteration, breakdown, grad_norm, elapsed)
            if iteration % config.log_every == 0 or iteration == config.iterations:
                self.logger.info(f"[{iteration}/{config.iterations}] total={breakdown['total']:.4f} "
                                 f"nll={breakdown['nll']:.4f} kinetic={breakdown['kinetic']:.4f} "
                                 f"prior={breakdown['prior']:.4f} |g|={grad_norm:.3f}")
        return log


def make_models(flow_config: FlowConfig, encoder_config: Optional[EncoderConfig]) -> Tuple[FlowModel, Optional[Encoder]]:
    """Поток и энкодер с независимыми потоками инициализации"""
    flow = FlowModel(flow_config, np.random.default_rng([flow_config.seed, 0]))
    encoder = None
    if encoder_config is not None:
        encoder = EncoderFactory.create(encoder_config, np.random.default_rng([encoder_config.seed, 1]))
    return flow, encoder


def make_checkpoint(flow: FlowModel, encoder: Optional[Encoder], normalizer: Normalizer,
                    provenance: Optional[Dict] = None) -> Checkpoint:
    parameters = {f"flow.{name}": value for name, value in flow.state_dict().items()}
    if encoder is not None:
        parameters.update({f"encoder.{name}": value for name, value in encoder.state_dict().items()})
    return Checkpoint(
        flow_config=flow.config.to_dict(),
        encoder_config=encoder.config.to_dict() if encoder is not None else None,
        normalization=normalizer.to_dict(),
        parameters=parameters,
        provenance=dict(provenance or {}),
    )


def restore_models(checkpoint: Checkpoint) -> Tuple[FlowModel, Optional[Encoder], Normalizer]:
    """Обратное к make_checkpoint: модели с загруженными параметрами и нормализатор"""
    try:
        flow_config = FlowConfig(**checkpoint.flow_config)
    except TypeError as e:
        raise CheckpointError(f"конфигурация потока не читается: {e}")
    encoder_config = (EncoderConfig(**checkpoint.encoder_config)
                      if checkpoint.encoder_config is not None else None)
    flow, encoder = make_models(flow_config, encoder_config)
    flow.load_state_dict(checkpoint.section("flow"))
    if encoder is not None:
        encoder.load_state_dict(checkpoint.section("encoder"))
    return flow, encoder, Normalizer.from_dict(checkpoint.normalization)


def configs_for(dataset: WindowedDataset, flow_overrides: Optional[Dict] = None,
                encoder_overrides: Optional[Dict] = None) -> Tuple[FlowConfig, Optional[EncoderConfig]]:
    """Согласует размерности конфигураций с набором данных"""
    flow_overrides = dict(flow_overrides or {})
    if not dataset.is_conditional:
        flow_overrides["context_features"] = 0
        return FlowConfig(data_dim=dataset.target_dim, **flow_overrides), None
    encoder_overrides = dict(encoder_overrides or {})
    encoder_overrides.update(input_dim=dataset.context_dim, window=dataset.window)
    encoder_config = EncoderConfig(**encoder_overrides)
    flow_overrides["context_features"] = encoder_config.embed_dim
    return FlowConfig(data_dim=dataset.target_dim, **flow_overrides), encoder_config


def train(dataset: WindowedDataset, flow: FlowModel, encoder: Optional[Encoder], config: TrainConfig,
          provenance: Optional[Dict] = None) -> Tuple[Checkpoint, TrainLog]:
    log = Trainer(flow, encoder, config).train(dataset)
    provenance = dict(provenance or {})
    provenance.update(iterations=config.iterations, seed=config.seed, weights=config.weights.to_dict(),
                      dataset=dataset.metadata)
    return make_checkpoint(flow, encoder, dataset.normalizer, provenance), log
