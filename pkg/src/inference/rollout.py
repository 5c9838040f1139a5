"""
Рекурсивный прогноз: оценка следующего (или предыдущего) состояния
подается обратно в окно как псевдонаблюдение.

    forward, R=5:  [o1..o5] -> x6;  [o2..o5, x6] -> x7;  ...
    backward:      [o10, o9, .., o6] -> x5;  [o9, .., o6, x5] -> x4;  ...

В обоих направлениях из окна удаляется первая строка, а оценка
добавляется в конец.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from config import constants as C
from src.core.errors import ConfigError, DimensionError, NonFiniteError
from src.dynamics.windows import DIRECTIONS, Normalizer
from src.flow import FlowModel
from .estimator import EstimateReport, estimate_state

logger = logging.getLogger(__name__)

AGGREGATIONS = ("mean", "sample")


@dataclass
class RolloutConfig:
    direction: str = "forward"
    window: int = C.WINDOW_LENGTH
    horizon: int = C.WINDOW_HORIZON
    n_steps: int = C.ROLLOUT_STEPS
    aggregation: str = "mean"
    n_samples: int = C.ESTIMATE_SAMPLES
    window_size_days: Optional[int] = None  # задает n_steps суточными шагами

    def __post_init__(self):
        bad = []
        if self.window_size_days is not None:
            if self.window_size_days in C.ROLLOUT_WINDOWS:
                self.n_steps = self.window_size_days
            else:
                bad.append("window_size_days")
        if self.direction not in DIRECTIONS:
            bad.append("direction")
        if self.aggregation not in AGGREGATIONS:
            bad.append("aggregation")
        if self.n_steps < 1:
            bad.append("n_steps")
        if self.window < 1:
            bad.append("window")
        if self.n_samples < 1:
            bad.append("n_samples")
        if bad:
            raise ConfigError("некорректная конфигурация прогноза", fields=bad)


def aggregate(report: EstimateReport, how: str) -> np.ndarray:
    """Среднее выборок или одна (первая) выборка, в исходных единицах"""
    return report.mean if how == "mean" else report.samples[0].copy()


def rollout(flow: FlowModel, encoder, initial_context, config: RolloutConfig, seed: int = C.GLOBAL_SEED,
            normalizer: Optional[Normalizer] = None, **kwargs) -> List[EstimateReport]:
    """
    initial_context - нормированное окно (R, m). Шаг k использует seed + k,
    поэтому первый шаг совпадает с estimate_state(seed).
    """
    context = np.array(initial_context, dtype=np.float64)
    if context.ndim != 2 or context.shape[0] != config.window:
        raise DimensionError(f"начальное окно должно быть ({config.window}, m), форма {context.shape}")
    obs_dim = context.shape[1]
    if flow.data_dim < obs_dim:
        raise DimensionError(f"оценка размерности {flow.data_dim} не может заменить наблюдение размерности {obs_dim}")
    normalizer = normalizer or Normalizer.identity(obs_dim, flow.data_dim)

    reports = []
    for step in range(config.n_steps):
        report = estimate_state(flow, encoder, context, config.n_samples, seed + step, normalizer,
                                location={"step": step + 1, "direction": config.direction}, **kwargs)
        reports.append(report)
        estimate = aggregate(report, config.aggregation)
        if not np.all(np.isfinite(estimate)):
            raise NonFiniteError("неконечная оценка в прогнозе", where=f"шаг {step + 1}")
        pseudo = normalizer.normalize_obs(estimate[:obs_dim])
        context = np.vstack([context[1:], pseudo[None, :]])
    logger.info(f"Прогноз {config.direction}: {config.n_steps} шагов, окно {config.window}, "
                f"агрегирование {config.aggregation}")
    return reports


def bands(reports: List[EstimateReport], n_sigma: float = C.BAND_SIGMA) -> pd.DataFrame:
    """Полосы mean +- n_sigma * std по шагам и компонентам"""
    label = f"{n_sigma:g}sigma"
    rows = []
    for step, report in enumerate(reports, start=1):
        for dim, name in enumerate(report.dim_names):
            mean, std = report.mean[dim], report.std[dim]
            rows.append({"step": step, "dim": name, "mean": mean,
                         f"lo{label}": mean - n_sigma * std, f"hi{label}": mean + n_sigma * std})
    return pd.DataFrame(rows, columns=["step", "dim", "mean", f"lo{label}", f"hi{label}"])
