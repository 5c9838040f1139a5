"""
Оконные наборы (контекст из R наблюдений, целевое состояние) для прямой
и обратной оценки, плюс нормализация по измерениям.

    forward:  (o_n, ..., o_{n+R-1})        -> x_{n+R-1+h}
    backward: (o_n, o_{n-1}, ..., o_{n-R+1}) -> x_{n-R+1-h}
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config import constants as C
from src.core.errors import DomainError, TrajectoryTooShortError, WindowLengthError
from .trajectory import Trajectory, TrajectoryLike, as_trajectory_list, stream

logger = logging.getLogger(__name__)

DIRECTIONS = ("forward", "backward")


@dataclass
class Normalizer:
    """z-нормализация наблюдений и целей; std ограничен снизу"""
    obs_mean: np.ndarray
    obs_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray

    @classmethod
    def fit(cls, observations: np.ndarray, targets: np.ndarray) -> "Normalizer":
        def stats(values):
            if values.shape[1] == 0:
                return np.zeros(0), np.ones(0)
            return values.mean(axis=0), np.maximum(values.std(axis=0), C.STD_FLOOR)
        obs_mean, obs_std = stats(observations)
        target_mean, target_std = stats(targets)
        return cls(obs_mean, obs_std, target_mean, target_std)

    @classmethod
    def identity(cls, obs_dim: int, target_dim: int) -> "Normalizer":
        return cls(np.zeros(obs_dim), np.ones(obs_dim), np.zeros(target_dim), np.ones(target_dim))

    @property
    def obs_dim(self) -> int:
        return len(self.obs_mean)

    @property
    def target_dim(self) -> int:
        return len(self.target_mean)

    def normalize_obs(self, values: np.ndarray) -> np.ndarray:
        return (values - self.obs_mean) / self.obs_std

    def denormalize_obs(self, values: np.ndarray) -> np.ndarray:
        return values * self.obs_std + self.obs_mean

    def normalize_target(self, values: np.ndarray) -> np.ndarray:
        return (values - self.target_mean) / self.target_std

    def denormalize_target(self, values: np.ndarray) -> np.ndarray:
        return values * self.target_std + self.target_mean

    @property
    def log_abs_det(self) -> float:
        """log p_raw = log p_norm - log_abs_det"""
        return float(np.sum(np.log(self.target_std)))

    def to_dict(self) -> Dict:
        return {name: getattr(self, name).tolist()
                for name in ("obs_mean", "obs_std", "target_mean", "target_std")}

    @classmethod
    def from_dict(cls, data: Dict) -> "Normalizer":
        return cls(*(np.asarray(data[name], dtype=np.float64)
                     for name in ("obs_mean", "obs_std", "target_mean", "target_std")))


@dataclass
class WindowedDataset:
    """
    Пары (контекст, цель) в нормализованных единицах.
    Для безусловных наборов (две луны) window = 0 и контекст пуст.
    """
    contexts: np.ndarray  # (N, R, m)
    targets: np.ndarray  # (N, d)
    direction: str
    window: int
    horizon: int
    normalizer: Normalizer
    target_index: np.ndarray = None
    traj_index: np.ndarray = None
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.targets)
        if self.target_index is None:
            self.target_index = np.arange(n)
        if self.traj_index is None:
            self.traj_index = np.zeros(n, dtype=int)

    def __len__(self):
        return len(self.targets)

    @property
    def is_conditional(self) -> bool:
        return self.window > 0

    @property
    def context_dim(self) -> int:
        return self.contexts.shape[2] if self.is_conditional else 0

    @property
    def target_dim(self) -> int:
        return self.targets.shape[1]

    def batch(self, indices: np.ndarray) -> Tuple[Optional[np.ndarray], np.ndarray]:
        contexts = self.contexts[indices] if self.is_conditional else None
        return contexts, self.targets[indices]


def point_dataset(points: np.ndarray, normalize: bool = True, metadata: Optional[Dict] = None) -> WindowedDataset:
    """Безусловный набор точек (без контекста)"""
    points = np.asarray(points, dtype=np.float64)
    normalizer = (Normalizer.fit(np.zeros((len(points), 0)), points) if normalize
                  else Normalizer.identity(0, points.shape[1]))
    return WindowedDataset(
        contexts=np.zeros((len(points), 0, 0)),
        targets=normalizer.normalize_target(points),
        direction="none", window=0, horizon=0,
        normalizer=normalizer,
        metadata=dict(metadata or {}, kind="points"),
    )


def _check_window_args(R: int, direction: str, horizon: int):
    if R < 1:
        raise WindowLengthError(f"R={R} < 1")
    if horizon < 1:
        raise DomainError(f"horizon={horizon} < 1")
    if direction not in DIRECTIONS:
        raise DomainError(f"направление {direction!r} не из {DIRECTIONS}")


def make_windows(source: TrajectoryLike, R: int = C.WINDOW_LENGTH, direction: str = "forward",
                 horizon: int = C.WINDOW_HORIZON, include_params: bool = False,
                 context_noise_sigma: float = C.CONTEXT_NOISE_SIGMA, seed: int = C.GLOBAL_SEED,
                 normalizer: Optional[Normalizer] = None) -> WindowedDataset:
    """
    Нарезает окна по каждой траектории. Нормализатор подбирается по всем
    наблюдениям и целям (если не передан), шум контекста добавляется
    в нормализованных единицах.
    """
    _check_window_args(R, direction, horizon)
    trajectories = as_trajectory_list(source)
    if normalizer is None:
        normalizer = Normalizer.fit(np.vstack([t.observations for t in trajectories]),
                                    np.vstack([t.targets(include_params) for t in trajectories]))

    contexts, targets, target_index, traj_index = [], [], [], []
    for number, traj in enumerate(trajectories):
        n = len(traj)
        count = n - R - horizon + 1
        if count <= 0:
            continue
        obs = normalizer.normalize_obs(traj.observations)
        tgt = normalizer.normalize_target(traj.targets(include_params))
        if direction == "backward":
            obs, tgt = obs[::-1], tgt[::-1]
        # sliding_window_view: (n-R+1, m, R) -> (count, R, m)
        view = np.lib.stride_tricks.sliding_window_view(obs, R, axis=0)[:count]
        contexts.append(np.swapaxes(view, 1, 2))
        idx = np.arange(count) + R - 1 + horizon
        targets.append(tgt[idx])
        target_index.append(idx if direction == "forward" else n - 1 - idx)
        traj_index.append(np.full(count, number))

    if not contexts:
        longest = max(len(t) for t in trajectories)
        raise TrajectoryTooShortError(
            f"нет ни одного окна: длина {longest}, требуется не меньше {R + horizon}")

    contexts = np.concatenate(contexts)
    if context_noise_sigma > 0:
        contexts = contexts + stream(seed, 0xC0).standard_normal(contexts.shape) * context_noise_sigma

    dataset = WindowedDataset(
        contexts=contexts,
        targets=np.concatenate(targets),
        direction=direction,
        window=R,
        horizon=horizon,
        normalizer=normalizer,
        target_index=np.concatenate(target_index),
        traj_index=np.concatenate(traj_index),
        metadata={"system": trajectories[0].system, "seed": seed, "include_params": include_params,
                  "context_noise_sigma": context_noise_sigma, "trajectories": len(trajectories),
                  "window": R, "horizon": horizon, "direction": direction},
    )
    logger.info(f"Окна {direction}: R={R}, h={horizon}, {len(dataset)} пар")
    return dataset


def window_bounds(length: int, start: int, R: int, direction: str, horizon: int) -> Tuple[np.ndarray, int]:
    """Индексы наблюдений контекста (в порядке подачи) и индекс цели"""
    _check_window_args(R, direction, horizon)
    if direction == "forward":
        rows = start + np.arange(R)
        target = start + R - 1 + horizon
    else:
        rows = start - np.arange(R)
        target = start - R + 1 - horizon
    if rows.min() < 0 or rows.max() >= length or not 0 <= target < length:
        raise TrajectoryTooShortError(
            f"окно {direction} с началом {start} (R={R}, h={horizon}) выходит за траекторию длины {length}")
    return rows, target


def extract_context(traj: Trajectory, start: int, R: int, direction: str, horizon: int,
                    normalizer: Normalizer) -> Tuple[np.ndarray, int]:
    """Нормализованный контекст (R, m) без добавочного шума и индекс его цели"""
    rows, target = window_bounds(len(traj), start, R, direction, horizon)
    return normalizer.normalize_obs(traj.observations[rows]), target


def nearest_targets(dataset: WindowedDataset, context: np.ndarray, n: int) -> np.ndarray:
    """
    Цели n окон с ближайшими контекстами (эмпирическое условное распределение),
    в исходных единицах.
    """
    if not dataset.is_conditional:
        raise DomainError("безусловный набор не имеет контекстов")
    n = min(n, len(dataset))
    tree = cKDTree(dataset.contexts.reshape(len(dataset), -1))
    _, idx = tree.query(np.asarray(context).reshape(-1), k=n)
    idx = np.atleast_1d(idx)
    return dataset.normalizer.denormalize_target(dataset.targets[idx])
