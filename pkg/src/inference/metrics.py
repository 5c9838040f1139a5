from typing import Dict, Optional

import numpy as np
from scipy.stats import gaussian_kde

from config import constants as C
from src.core.errors import DimensionError, DomainError, ZeroDenominatorError
from src.dynamics.windows import Normalizer
from src.flow import FlowModel

_ZERO_TOL = 1e-9


def mape(predicted, actual) -> float:
    """100 * mean(|pred - actual| / |actual|)"""
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1)
    actual = np.asarray(actual, dtype=np.float64).reshape(-1)
    if predicted.shape != actual.shape:
        raise DimensionError(f"длины {predicted.size} и {actual.size} не совпадают")
    if actual.size == 0:
        raise DomainError("пустые последовательности")
    zero = np.flatnonzero(np.abs(actual) <= _ZERO_TOL)
    if zero.size:
        raise ZeroDenominatorError(zero.tolist())
    return float(100.0 * np.mean(np.abs(predicted - actual) / np.abs(actual)))


def marginal_nll(samples: np.ndarray, value: float) -> float:
    """-log плотности одномерного KDE (правило Сильвермана) в точке value"""
    density = gaussian_kde(samples, bw_method="silverman")(np.atleast_1d(value))[0]
    return float(-np.log(max(density, np.finfo(np.float64).tiny)))


def mean_nll(flow: FlowModel, encoder, contexts: Optional[np.ndarray], states: np.ndarray,
             normalizer: Optional[Normalizer] = None, n_samples: int = C.ESTIMATE_SAMPLES,
             seed: int = C.GLOBAL_SEED, per_dimension: bool = True) -> Dict:
    """
    Средний -log p(истинное состояние | контекст) и по компонентам через
    одномерные KDE маргиналов по выборкам потока. states - в нормированных
    единицах; с normalizer результат переводится в исходные единицы.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if len(states) == 0:
        raise DomainError("пустой набор для оценки")
    embedding = encoder.embed(contexts) if encoder is not None and contexts is not None else None
    log_probs = flow.log_prob(states, embedding).log_prob.data
    shift = normalizer.log_abs_det if normalizer is not None else 0.0
    result = {"total": float(-np.mean(log_probs) + shift), "n_pairs": len(states)}
    if not per_dimension:
        return result

    per_dim = np.zeros(flow.data_dim)
    for i in range(len(states)):
        row_context = None if embedding is None else embedding.data[i:i + 1]
        samples, _ = flow.sample(n_samples, row_context, seed=np.random.default_rng([seed, i]))
        truth = states[i]
        if normalizer is not None:
            samples = normalizer.denormalize_target(samples)
            truth = normalizer.denormalize_target(truth)
        per_dim += [marginal_nll(samples[:, j], truth[j]) for j in range(flow.data_dim)]
    result["per_dimension"] = (per_dim / len(states)).tolist()
    return result
