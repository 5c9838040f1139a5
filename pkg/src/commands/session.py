"""
Общая подготовка для estimate / rollout / evaluate: модели из контрольной
точки, набор данных, проверка совместимости, выбор окна и истинное
распределение цели.
"""
import logging
import os
import re
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.errors import CheckpointError, ConfigError, DomainError
from src.dynamics import (Normalizer, SirParams, Trajectory, TrajectorySet, VehicleParams,
                          constant_velocity, extract_context, make_windows, nearest_targets,
                          sir_continuations, trajectory_location, vehicle_continuations,
                          vehicle_simulate, window_bounds)
from src.training import restore_models

_TIME_PATTERN = re.compile(r"^t=([-+]?\d+(\.\d*)?([eE][-+]?\d+)?)$")
LOCATIONS = ("before", "at", "after")


class EvaluationSession:
    """Контрольная точка + набор данных, на которых считаются оценки"""

    def __init__(self, checkpoint, checkpoint_path: str, trajectories: TrajectorySet, dataset_path: str):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.checkpoint = checkpoint
        self.checkpoint_path = checkpoint_path
        self.trajectories = trajectories
        self.dataset_path = dataset_path
        self.flow, self.encoder, self.normalizer = restore_models(checkpoint)
        self.windowing: Dict = dict(checkpoint.provenance.get("dataset", {}))
        self._windows = None
        self.check_compatible()

    # Схема
    @property
    def conditional(self) -> bool:
        return self.window > 0

    @property
    def window(self) -> int:
        return int(self.windowing.get("window", 0))

    @property
    def horizon(self) -> int:
        return int(self.windowing.get("horizon", 0))

    @property
    def direction(self) -> str:
        return self.windowing.get("direction", "none")

    @property
    def include_params(self) -> bool:
        return bool(self.windowing.get("include_params", False))

    @property
    def metadata(self) -> Dict:
        return self.trajectories.metadata

    def dim_names(self) -> List[str]:
        names = list(self.trajectories[0].state_names)
        if self.include_params:
            names += ["beta", "gamma"]
        return names

    def check_compatible(self):
        """Размерности и система контрольной точки должны совпадать с набором"""
        first = self.trajectories[0]
        expected = {"system": self.windowing.get("system"), "obs_dim": self.normalizer.obs_dim,
                    "target_dim": self.flow.data_dim}
        actual = {"system": first.system,
                  "obs_dim": first.observation_dim if self.conditional else 0,
                  "target_dim": first.state_dim + (2 if self.include_params else 0)}
        if expected["system"] is None:
            expected["system"] = actual["system"]
        if expected != actual:
            raise CheckpointError("контрольная точка несовместима с набором данных",
                                  expected=expected, actual=actual)

    def trajectory(self, index: int) -> Trajectory:
        if not 0 <= index < len(self.trajectories):
            raise DomainError(f"траектория {index} вне [0, {len(self.trajectories)})")
        return self.trajectories[index]

    # Выбор окна
    def context_start(self, traj: Trajectory, at: Optional[str], start: Optional[int]) -> int:
        """
        Индекс первого наблюдения контекста. at: before | at | after | t=<время>;
        контекст заканчивается в указанный момент (для backward - начинается с него).
        """
        if start is not None:
            return int(start)
        dt = float(traj.times[1] - traj.times[0]) if len(traj) > 1 else 1.0
        if at is None:
            return 0 if self.direction == "forward" else len(traj) - 1
        if at in LOCATIONS:
            return trajectory_location(at, self.window, self.horizon, self.direction, dt=dt)
        match = _TIME_PATTERN.match(at)
        if not match:
            raise ConfigError(f"--at ожидает before|at|after|t=<время>, получено {at!r}", fields=["at"])
        end = int(np.argmin(np.abs(traj.times - float(match.group(1)))))
        if self.direction == "forward":
            return end - self.window + 1
        return end + self.window - 1

    def context(self, traj: Trajectory, start: int) -> Tuple[np.ndarray, int, np.ndarray]:
        """(нормированный контекст, индекс цели, индексы строк контекста)"""
        rows, target = window_bounds(len(traj), start, self.window, self.direction, self.horizon)
        context, _ = extract_context(traj, start, self.window, self.direction, self.horizon, self.normalizer)
        return context, target, rows

    def target_value(self, traj: Trajectory, target: int) -> np.ndarray:
        return traj.targets(self.include_params)[target]

    # Истинное распределение
    def windows(self):
        """Оконный набор с нормализатором контрольной точки (без шума контекста)"""
        if self._windows is None:
            self._windows = make_windows(self.trajectories, self.window, self.direction, self.horizon,
                                         self.include_params, context_noise_sigma=0.0,
                                         seed=self.windowing.get("seed", 0), normalizer=self.normalizer)
        return self._windows

    def truth_samples(self, traj_index: int, context: Optional[np.ndarray], rows: Optional[np.ndarray],
                      target: Optional[int], n: int, seed: int) -> np.ndarray:
        """
        Выборки истинного распределения цели в исходных единицах:
        симулятор там, где он известен, иначе цели ближайших окон.
        """
        system = self.trajectories.system
        if not self.conditional:
            points = self.trajectories[0].states
            pick = np.random.default_rng([seed, 0x7E]).choice(len(points), size=min(n, len(points)), replace=False)
            return points[np.sort(pick)]

        traj = self.trajectory(traj_index)
        if system == "vehicle" and self.direction == "forward":
            params, controls = self.vehicle_setup()
            replay = vehicle_simulate(len(traj), params, self.metadata.get("seed", 0), controls,
                                      psi=traj.psi, traj_index=traj_index)
            return vehicle_continuations(replay, int(rows[-1]), self.horizon, n, params, seed, controls)

        if system in ("sir", "sir-ensemble"):
            params = self.sir_params(traj)
            samples = sir_continuations(traj.states[target], params, 0, n, seed)
            if self.include_params:
                samples = np.hstack([samples, np.tile(traj.params, (n, 1))])
            return samples

        return nearest_targets(self.windows(), context, n)

    def vehicle_setup(self):
        stored = dict(self.metadata.get("params", {}))
        velocity = stored.pop("velocity", None)
        known = {k: v for k, v in stored.items() if k in VehicleParams.__dataclass_fields__}
        controls = constant_velocity(velocity) if velocity is not None else None
        return VehicleParams(**known), controls

    def sir_params(self, traj: Trajectory) -> SirParams:
        stored = self.metadata.get("params", {})
        if traj.params is not None:
            beta, gamma = (float(v) for v in traj.params)
        else:
            beta, gamma = stored.get("beta"), stored.get("gamma")
        if beta is None or gamma is None:
            raise CheckpointError("в метаданных набора нет параметров SIR", expected="beta, gamma", actual=stored)
        return SirParams(beta=beta, gamma=gamma, noise_sigma=stored.get("noise_sigma", 0.0),
                         dt=stored.get("dt", 1.0))

    def provenance(self) -> Dict:
        return {"checkpoint_id": self.checkpoint.checkpoint_id,
                "checkpoint": os.path.basename(self.checkpoint_path),
                "dataset": os.path.basename(self.dataset_path)}


def open_session(command, checkpoint_path: str, dataset_path: str) -> EvaluationSession:
    checkpoint_path = command.input_path(checkpoint_path, "checkpoints")
    dataset_path = command.input_path(dataset_path, "datasets")
    checkpoint = command.rm.load_checkpoint(checkpoint_path)
    trajectories = command.rm.load_dataset(dataset_path)
    return EvaluationSession(checkpoint, checkpoint_path, trajectories, dataset_path)
