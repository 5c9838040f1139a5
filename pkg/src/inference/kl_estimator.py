"""
Оценка KL(p_hat || p) по k ближайшим соседям:

    D ~ d/n * sum_i log(s_k(i) / r_k(i)) + log(m / (n - 1))

r_k(i) - расстояние от i-й точки p_hat до k-го соседа среди остальных точек p_hat,
s_k(i) - до k-го соседа среди точек p. Такая расстановка дает 0.5 для
N(0,1) против N(1,1) и неотрицательна в среднем.
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.spatial import cKDTree

from config import constants as C
from src.core.errors import DegenerateDistanceError, DimensionError, InsufficientSamplesError

logger = logging.getLogger(__name__)


@dataclass
class KlConfig:
    k: int = C.KNN_K
    jitter: float = C.KL_JITTER
    seed: int = C.GLOBAL_SEED

    def __post_init__(self):
        if self.k < 1:
            raise InsufficientSamplesError(f"k={self.k} < 1")

    def estimate(self, samples_p_hat, samples_p) -> float:
        return kl_knn(samples_p_hat, samples_p, self.k, self.jitter, self.seed)

    def estimate_per_dimension(self, samples_p_hat, samples_p) -> List[float]:
        return kl_knn_per_dimension(samples_p_hat, samples_p, self.k, self.jitter, self.seed)


def _as_points(samples) -> np.ndarray:
    points = np.asarray(samples, dtype=np.float64)
    return points[:, None] if points.ndim == 1 else points


def _kth_distance(tree: cKDTree, points: np.ndarray, k: int) -> np.ndarray:
    distances, _ = tree.query(points, k=k)
    return distances if k == 1 else distances[:, k - 1]


def kl_knn(samples_p_hat, samples_p, k: int = C.KNN_K, jitter: float = C.KL_JITTER,
           seed: int = C.GLOBAL_SEED) -> float:
    p_hat, p = _as_points(samples_p_hat), _as_points(samples_p)
    n, d = p_hat.shape
    m = p.shape[0]
    if p.shape[1] != d:
        raise DimensionError(f"размерности выборок {d} и {p.shape[1]} не совпадают")
    if n <= k or m < k:
        raise InsufficientSamplesError(f"нужно n > k и m >= k: n={n}, m={m}, k={k}")

    if len(np.unique(p_hat, axis=0)) < n:
        scale = max(1.0, float(np.abs(p_hat).max()))
        p_hat = p_hat + np.random.default_rng(seed).standard_normal(p_hat.shape) * jitter * scale
        logger.debug(f"kl_knn: в p_hat есть совпадающие точки, добавлен шум {jitter * scale:.1e}")

    # k+1: первый сосед - сама точка
    r = cKDTree(p_hat).query(p_hat, k=k + 1)[0][:, k]
    s = _kth_distance(cKDTree(p), p_hat, k)
    if np.any(r <= 0.0) or np.any(s <= 0.0):
        bad = np.flatnonzero((r <= 0.0) | (s <= 0.0))[:10].tolist()
        raise DegenerateDistanceError(f"нулевые расстояния до соседей (точки {bad})")
    return float(d / n * np.sum(np.log(s / r)) + np.log(m / (n - 1)))


def kl_knn_per_dimension(samples_p_hat, samples_p, k: int = C.KNN_K, jitter: float = C.KL_JITTER,
                         seed: int = C.GLOBAL_SEED) -> List[float]:
    """KL по одномерным маргиналам каждой компоненты"""
    p_hat, p = _as_points(samples_p_hat), _as_points(samples_p)
    if p_hat.shape[1] != p.shape[1]:
        raise DimensionError(f"размерности выборок {p_hat.shape[1]} и {p.shape[1]} не совпадают")
    return [kl_knn(p_hat[:, j], p[:, j], k, jitter, seed) for j in range(p_hat.shape[1])]
