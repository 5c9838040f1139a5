"""
Модель SIR: dS/dt = -beta I S, dI/dt = beta I S - gamma I, dR/dt = gamma I.
Интегрируется классическим методом Рунге-Кутты 4-го порядка.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from config import constants as C
from src.core.errors import DomainError, InitialConditionError, TrajectoryTooShortError
from .trajectory import Trajectory, TrajectorySet, stream

logger = logging.getLogger(__name__)

SIR_NAMES = ("S", "I", "R")


@dataclass
class SirState:
    S: float = C.SIR_S0
    I: float = C.SIR_I0
    R: float = C.SIR_R0
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.S, self.I, self.R])

    @classmethod
    def from_array(cls, values, t: float = 0.0) -> "SirState":
        return cls(float(values[0]), float(values[1]), float(values[2]), t)


@dataclass
class SirParams:
    beta: float = C.SIR_BETA
    gamma: float = C.SIR_GAMMA
    noise_sigma: float = C.SIR_NOISE_SIGMA
    dt: float = C.SIR_DT

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise DomainError(f"beta={self.beta}, gamma={self.gamma} должны быть положительными")


def sir_rhs(s: SirState, p: SirParams) -> Tuple[float, float, float]:
    infection = p.beta * s.I * s.S
    recovery = p.gamma * s.I
    return -infection, infection - recovery, recovery


def _rhs_array(y: np.ndarray, p: SirParams) -> np.ndarray:
    infection = p.beta * y[1] * y[0]
    recovery = p.gamma * y[1]
    return np.array([-infection, infection - recovery, recovery])


def rk4_step(s: SirState, p: SirParams, dt: Optional[float] = None) -> SirState:
    dt = p.dt if dt is None else dt
    if dt <= 0:
        raise DomainError(f"dt={dt} должен быть положительным")
    y = s.as_array()
    k1 = _rhs_array(y, p)
    k2 = _rhs_array(y + 0.5 * dt * k1, p)
    k3 = _rhs_array(y + 0.5 * dt * k2, p)
    k4 = _rhs_array(y + dt * k3, p)
    y_next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return SirState.from_array(y_next, s.t + dt)


def integrate(initial: SirState, p: SirParams, n_records: int) -> np.ndarray:
    """Номинальная траектория: n_records состояний начиная с initial"""
    states = np.empty((n_records, 3))
    current = initial
    states[0] = current.as_array()
    for k in range(1, n_records):
        current = rk4_step(current, p)
        states[k] = current.as_array()
    return states


def sir_simulate(p: SirParams, initial: SirState, n_steps: int, seed: int,
                 traj_index: int = 0, tag_params: bool = False) -> Trajectory:
    """Номинальная траектория RK4 и ее копия с наблюдательным шумом"""
    total = initial.S + initial.I + initial.R
    if abs(total - 1.0) > C.CONSERVATION_TOL:
        raise InitialConditionError(f"S+I+R = {total!r}, ожидается 1")
    if n_steps < 1:
        raise TrajectoryTooShortError(f"n_steps={n_steps} < 1")

    nominal = integrate(initial, p, n_steps)
    noise = stream(seed, traj_index).standard_normal(nominal.shape) * p.noise_sigma
    return Trajectory(
        system="sir",
        times=initial.t + np.arange(n_steps) * p.dt,
        observations=nominal + noise,
        states=nominal.copy(),
        observation_names=tuple(f"obs_{name}" for name in SIR_NAMES),
        state_names=SIR_NAMES,
        nominal=nominal,
        params=np.array([p.beta, p.gamma]) if tag_params else None,
        seed=seed,
    )


def sir_ensemble(beta_range: Tuple[float, float], gamma_range: Tuple[float, float], n_traj: int,
                 initial: SirState, seed: int, n_steps: int = C.SIR_STEPS,
                 noise_sigma: float = C.SIR_NOISE_SIGMA, dt: float = C.SIR_DT) -> TrajectorySet:
    """n_traj траекторий с (beta, gamma) ~ U(beta_range) x U(gamma_range), помеченных параметрами"""
    for low, high in (beta_range, gamma_range):
        if low > high or low <= 0:
            raise DomainError(f"некорректный интервал [{low}, {high}]")
    if n_traj < 1:
        raise DomainError(f"n_traj={n_traj} < 1")

    rng = stream(seed, 0xE5)
    betas = rng.uniform(beta_range[0], beta_range[1], n_traj)
    gammas = rng.uniform(gamma_range[0], gamma_range[1], n_traj)
    trajectories = []
    for i in range(n_traj):
        params = SirParams(beta=float(betas[i]), gamma=float(gammas[i]), noise_sigma=noise_sigma, dt=dt)
        trajectories.append(sir_simulate(params, initial, n_steps, seed, traj_index=i, tag_params=True))
    logger.info(f"Ансамбль SIR: {n_traj} траекторий, beta в {beta_range}, gamma в {gamma_range}")
    return TrajectorySet(trajectories, {"system": "sir-ensemble", "seed": seed,
                                        "beta_range": list(beta_range), "gamma_range": list(gamma_range)})


def sir_continuations(state: np.ndarray, p: SirParams, n_ahead: int, n_samples: int, seed: int) -> np.ndarray:
    """Истинное распределение состояния через n_ahead шагов: номинал + наблюдательный шум"""
    future = integrate(SirState.from_array(state), p, n_ahead + 1)[-1]
    noise = stream(seed, n_ahead).standard_normal((n_samples, 3)) * p.noise_sigma
    return future + noise


def with_noise(p: SirParams, sigma: float) -> SirParams:
    return replace(p, noise_sigma=sigma)
