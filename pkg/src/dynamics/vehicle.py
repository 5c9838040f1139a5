"""
Автомобиль со случайным переключением.

    p_x' = p_x + dt v cos(theta)
    p_y' = p_y + dt v sin(theta)
    theta' = theta + dt v phi
    phi' = phi + dt psi c1 cos(c2 t)      (psi действует с t >= switch_time)

Шум N(0, sigma_v), N(0, sigma_phi) добавляется к v и phi на каждом шаге.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from config import constants as C
from src.core.errors import DomainError, TrajectoryTooShortError
from .trajectory import Trajectory, TrajectorySet, stream

logger = logging.getLogger(__name__)

VelocitySchedule = Callable[[float], float]
_SWITCH_TOL = 1e-9
_PSI_DELAY = 3  # psi -> phi -> theta -> положение


@dataclass
class VehicleParams:
    c1: float = C.VEHICLE_C1
    c2: float = C.VEHICLE_C2
    sigma_v: float = C.VEHICLE_SIGMA_V
    sigma_phi: float = C.VEHICLE_SIGMA_PHI
    dt: float = C.VEHICLE_DT
    switch_time: float = C.VEHICLE_SWITCH_TIME
    psi: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.psi <= 1.0:
            raise DomainError(f"psi={self.psi} вне [-1, 1]")
        if self.dt <= 0:
            raise DomainError(f"dt={self.dt} должен быть положительным")

    def noiseless(self) -> "VehicleParams":
        return replace(self, sigma_v=0.0, sigma_phi=0.0)


@dataclass
class VehicleState:
    p_x: float = 0.0
    p_y: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    v: float = C.VEHICLE_VELOCITY
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.p_x, self.p_y, self.theta, self.phi, self.v])


def constant_velocity(value: float = C.VEHICLE_VELOCITY) -> VelocitySchedule:
    return lambda t: value


def _advance(p_x, p_y, theta, phi, v, t, psi, p: VehicleParams, eps_v, eps_phi, dv=0.0):
    """Один шаг для скаляров или массивов (векторизованные продолжения)"""
    active = t >= p.switch_time - _SWITCH_TOL
    psi_eff = np.where(active, psi, 0.0)
    new_px = p_x + p.dt * v * np.cos(theta)
    new_py = p_y + p.dt * v * np.sin(theta)
    new_theta = theta + p.dt * v * phi
    new_phi = phi + p.dt * psi_eff * p.c1 * np.cos(p.c2 * t) + eps_phi
    new_v = v + dv + eps_v
    return new_px, new_py, new_theta, new_phi, new_v


def vehicle_step(s: VehicleState, p: VehicleParams, noise: Tuple[float, float] = (0.0, 0.0),
                 dv: float = 0.0) -> VehicleState:
    """Один шаг уравнений движения; шум (eps_v, eps_phi) задается снаружи"""
    eps_v, eps_phi = noise
    px, py, theta, phi, v = _advance(s.p_x, s.p_y, s.theta, s.phi, s.v, s.t, p.psi, p,
                                     eps_v, eps_phi, dv)
    return VehicleState(float(px), float(py), float(theta), float(phi), float(v), s.t + p.dt)


def vehicle_simulate(n_steps: int, p: VehicleParams, seed: int,
                     controls: Optional[VelocitySchedule] = None,
                     initial: Optional[VehicleState] = None,
                     psi: Optional[float] = None,
                     traj_index: int = 0) -> Trajectory:
    """
    Возвращает зашумленную траекторию (n_steps записей) и номинальную без шума.
    psi разыгрывается из U[-1, 1] отдельным потоком, шум - своим,
    так что принудительный psi не меняет реализацию шума.
    """
    if n_steps < 1:
        raise TrajectoryTooShortError(f"n_steps={n_steps} < 1")
    controls = controls or constant_velocity()
    if psi is None:
        psi = float(stream(seed, traj_index, 1).uniform(-1.0, 1.0))
    params = replace(p, psi=psi)
    noise_rng = stream(seed, traj_index, 0)

    start = initial or VehicleState(v=controls(0.0))
    noisy = np.empty((n_steps, 5))
    nominal = np.empty((n_steps, 5))
    times = np.arange(n_steps) * p.dt
    noisy[0] = nominal[0] = start.as_array()

    eps = noise_rng.standard_normal((n_steps, 2)) * np.array([p.sigma_v, p.sigma_phi])
    for k in range(n_steps - 1):
        t = times[k]
        dv = controls(times[k + 1]) - controls(t)
        noisy[k + 1] = _advance(*noisy[k], t, psi, params, eps[k, 0], eps[k, 1], dv)
        nominal[k + 1] = _advance(*nominal[k], t, psi, params, 0.0, 0.0, dv)

    return Trajectory(
        system="vehicle",
        times=times,
        observations=noisy[:, :2].copy(),
        states=noisy[:, :2].copy(),
        observation_names=("obs_px", "obs_py"),
        state_names=("px", "py"),
        nominal=nominal[:, :2].copy(),
        kinematics=noisy,
        psi=psi,
        seed=seed,
    )


def vehicle_dataset(n_trajectories: int, n_steps: int, p: VehicleParams, seed: int,
                    controls: Optional[VelocitySchedule] = None) -> TrajectorySet:
    """Ансамбль траекторий; порядок по индексу детерминирован"""
    trajectories = [vehicle_simulate(n_steps, p, seed, controls, traj_index=i)
                    for i in range(n_trajectories)]
    result = TrajectorySet(trajectories, {"system": "vehicle", "seed": seed,
                                          "n_steps": n_steps, "n_trajectories": n_trajectories})
    logger.info(f"Сгенерировано {n_trajectories} траекторий автомобиля, {result.n_records} точек")
    return result


def psi_revealed(t: float, p: VehicleParams) -> bool:
    """
    psi меняет phi на шаге из switch_time, theta - на следующем,
    положение - только через _PSI_DELAY шагов после переключения.
    """
    return t >= p.switch_time + _PSI_DELAY * p.dt - _SWITCH_TOL


def vehicle_continuations(trajectory: Trajectory, step: int, n_ahead: int, n_samples: int,
                          p: VehicleParams, seed: int,
                          controls: Optional[VelocitySchedule] = None) -> np.ndarray:
    """
    Истинные выборки положения через n_ahead шагов после записи step.
    Пока psi не отразился в наблюдаемом положении, он разыгрывается заново для
    каждой выборки, а скрытые phi, theta пересчитываются от записи переключения
    с восстановленным шумом траектории (положения до step при этом не меняются).
    """
    controls = controls or constant_velocity()
    rng = stream(seed, step, n_ahead)
    kinematics = trajectory.kinematics
    times = trajectory.times
    if psi_revealed(float(times[step]), p):
        psi = np.full(n_samples, trajectory.psi)
        start = step
    else:
        psi = rng.uniform(-1.0, 1.0, n_samples)
        start = min(step, int(np.searchsorted(times, p.switch_time - _SWITCH_TOL)))

    px, py, theta, phi, v = np.tile(kinematics[start], (n_samples, 1)).T
    for k in range(start, step):
        t = float(times[k])
        dv = controls(float(times[k + 1])) - controls(t)
        drift = p.dt * trajectory.psi * p.c1 * np.cos(p.c2 * t) if t >= p.switch_time - _SWITCH_TOL else 0.0
        eps_v = kinematics[k + 1, 4] - kinematics[k, 4] - dv
        eps_phi = kinematics[k + 1, 3] - kinematics[k, 3] - drift
        px, py, theta, phi, v = _advance(px, py, theta, phi, v, t, psi, p, eps_v, eps_phi, dv)

    t0 = float(times[step])
    for k in range(n_ahead):
        t = t0 + k * p.dt
        eps_v = rng.standard_normal(n_samples) * p.sigma_v
        eps_phi = rng.standard_normal(n_samples) * p.sigma_phi
        dv = controls(t + p.dt) - controls(t)
        px, py, theta, phi, v = _advance(px, py, theta, phi, v, t, psi, p, eps_v, eps_phi, dv)
    return np.column_stack([px, py])


def trajectory_location(kind: str, window: int, horizon: int, direction: str = "forward",
                        dt: float = C.VEHICLE_DT) -> int:
    """
    Индекс первого наблюдения контекста, заканчивающегося до (t=3.0),
    на (t=5.5) или после (t=9.0) переключения.
    Для backward контекст идет назад во времени и заканчивается в этой точке.
    """
    end_times = {"before": 3.0, "at": C.VEHICLE_SWITCH_TIME, "after": 9.0}
    if kind not in end_times:
        raise DomainError(f"неизвестное положение: {kind}")
    end = int(round(end_times[kind] / dt))
    if direction == "forward":
        return end - window + 1
    return end + window - 1
