import numpy as np

from config import constants as C
from src.core.errors import DomainError
from .trajectory import Trajectory, TrajectorySet, stream


def two_moons(n: int = C.TWO_MOONS_POINTS, noise_sigma: float = C.TWO_MOONS_NOISE,
              seed: int = C.GLOBAL_SEED) -> np.ndarray:
    """
    Две переплетенные полуокружности радиуса 1: верхняя с центром в начале
    координат, нижняя перевернута (центр (1, 0.5), вершина в (1, -0.5)).
    Первые n//2 точек - верхняя дуга, при нечетном n нижняя на одну больше.
    """
    if n < 2:
        raise DomainError(f"n={n} < 2")
    if noise_sigma < 0:
        raise DomainError(f"noise_sigma={noise_sigma} < 0")
    n_upper = n // 2
    n_lower = n - n_upper
    theta_upper = np.linspace(0.0, np.pi, n_upper)
    theta_lower = np.linspace(0.0, np.pi, n_lower)
    upper = np.column_stack([np.cos(theta_upper), np.sin(theta_upper)])
    lower = np.column_stack([1.0 - np.cos(theta_lower), 1.0 - np.sin(theta_lower) - 0.5])
    points = np.vstack([upper, lower])
    if noise_sigma > 0:
        points = points + stream(seed, 0x2A).standard_normal(points.shape) * noise_sigma
    return points


def moon_labels(n: int) -> np.ndarray:
    """Метки дуг в порядке генерации: 0 - верхняя, 1 - нижняя"""
    return np.concatenate([np.zeros(n // 2, dtype=int), np.ones(n - n // 2, dtype=int)])


def distance_to_arcs(points: np.ndarray) -> np.ndarray:
    """Расстояние до ближайшей из двух дуг, столбцы (верхняя, нижняя)"""
    points = np.asarray(points, dtype=np.float64)
    return np.column_stack([_arc_distance(points, np.array([0.0, 0.0]), upper=True),
                            _arc_distance(points, np.array([1.0, 0.5]), upper=False)])


def nearest_arc(points: np.ndarray) -> np.ndarray:
    return np.argmin(distance_to_arcs(points), axis=1)


def _arc_distance(points: np.ndarray, center: np.ndarray, upper: bool) -> np.ndarray:
    rel = points - center
    angle = np.arctan2(rel[:, 1], rel[:, 0])
    # Верхняя дуга - углы [0, pi], нижняя - [-pi, 0]
    on_arc = (angle >= 0.0) if upper else (angle <= 0.0)
    radial = np.abs(np.hypot(rel[:, 0], rel[:, 1]) - 1.0)
    ends = center + np.array([[1.0, 0.0], [-1.0, 0.0]])
    to_ends = np.min(np.linalg.norm(points[:, None, :] - ends[None, :, :], axis=2), axis=1)
    return np.where(on_arc, radial, to_ends)


def two_moons_set(n: int = C.TWO_MOONS_POINTS, noise_sigma: float = C.TWO_MOONS_NOISE,
                  seed: int = C.GLOBAL_SEED) -> TrajectorySet:
    """Точки двух лун в формате набора данных: без наблюдений, состояние (x1, x2)"""
    points = two_moons(n, noise_sigma, seed)
    trajectory = Trajectory(
        system="two-moons",
        times=np.arange(n, dtype=np.float64),
        observations=np.zeros((n, 0)),
        states=points,
        observation_names=(),
        state_names=("x1", "x2"),
        seed=seed,
    )
    return TrajectorySet([trajectory], {"system": "two-moons", "seed": seed, "noise_sigma": noise_sigma,
                                        "kind": "points"})
