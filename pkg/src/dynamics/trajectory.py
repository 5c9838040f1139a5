from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np


@dataclass
class Trajectory:
    """
    Одна траектория: наблюдения o_n, истинные состояния x_n и
    (опционально) номинальная траектория без шума.
    """
    system: str
    times: np.ndarray
    observations: np.ndarray
    states: np.ndarray
    observation_names: Tuple[str, ...]
    state_names: Tuple[str, ...]
    nominal: Optional[np.ndarray] = None
    params: Optional[np.ndarray] = None  # (beta, gamma) для SIR
    kinematics: Optional[np.ndarray] = None  # (px, py, theta, phi, v) для автомобиля
    psi: Optional[float] = None
    seed: Optional[int] = None

    def __len__(self):
        return len(self.times)

    @property
    def observation_dim(self) -> int:
        return self.observations.shape[1]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    def targets(self, include_params: bool = False) -> np.ndarray:
        """Целевые векторы; с параметрами - состояние + (beta, gamma)"""
        if not include_params:
            return self.states
        from src.core.errors import DimensionError  # Ленивый импорт
        if self.params is None:
            raise DimensionError("траектория не помечена параметрами (beta, gamma)")
        return np.hstack([self.states, np.tile(self.params, (len(self), 1))])


@dataclass
class TrajectorySet:
    """Набор независимых траекторий одной системы"""
    trajectories: List[Trajectory]
    metadata: Dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.trajectories)

    def __getitem__(self, index: int) -> Trajectory:
        return self.trajectories[index]

    @property
    def system(self) -> str:
        return self.trajectories[0].system

    @property
    def n_records(self) -> int:
        return sum(len(t) for t in self.trajectories)

    @property
    def param_tags(self) -> Optional[np.ndarray]:
        if any(t.params is None for t in self.trajectories):
            return None
        return np.vstack([t.params for t in self.trajectories])


TrajectoryLike = Union[Trajectory, TrajectorySet, Sequence[Trajectory]]


def as_trajectory_list(source: TrajectoryLike) -> List[Trajectory]:
    if isinstance(source, Trajectory):
        return [source]
    if isinstance(source, TrajectorySet):
        return list(source.trajectories)
    return list(source)


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Независимый поток случайных чисел для (seed, индекс, ...)"""
    return np.random.default_rng([int(seed), *[int(k) for k in keys]])
