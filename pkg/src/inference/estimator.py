"""Оценка состояния по окну наблюдений и совместная оценка состояния и параметров SIR."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import constants as C
from src.core.errors import DimensionError, NonFiniteError
from src.diffcore import Tensor
from src.dynamics.sir import SIR_NAMES, SirParams, SirState, sir_simulate
from src.dynamics.windows import Normalizer
from src.flow import FlowModel
from .kl_estimator import KlConfig

logger = logging.getLogger(__name__)


@dataclass
class EstimateReport:
    """Выборки оценки в исходных единицах и их сводка"""
    samples: np.ndarray
    log_probs: np.ndarray
    dim_names: List[str]
    contours: Dict[int, np.ndarray] = field(default_factory=dict)
    kl: Optional[float] = None
    kl_per_dimension: Optional[List[float]] = None
    truth: Optional[np.ndarray] = None
    location: Dict = field(default_factory=dict)
    provenance: Dict = field(default_factory=dict)
    parameters: Dict = field(default_factory=dict)
    overlay: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise NonFiniteError("неконечные выборки в отчете", where=str(self.location))

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.samples.std(axis=0)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def summary(self) -> Dict:
        summary = {
            "n_samples": self.n_samples,
            "dims": list(self.dim_names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "mean_log_prob": float(self.log_probs.mean()),
            "location": self.location,
            "provenance": self.provenance,
        }
        if self.kl is not None:
            summary["kl"] = self.kl
            summary["kl_per_dimension"] = self.kl_per_dimension
        if self.truth is not None:
            summary["truth_mean"] = np.asarray(self.truth).reshape(-1, len(self.dim_names)).mean(axis=0).tolist()
        if self.parameters:
            summary["parameters"] = self.parameters
        return summary


def embed_one(encoder, context) -> Optional[Tensor]:
    if encoder is None:
        return None
    context = np.asarray(context, dtype=np.float64)
    if context.ndim != 2:
        raise DimensionError(f"контекст должен быть (R, m), форма {context.shape}")
    return encoder.embed(context[None])


def estimate_state(flow: FlowModel, encoder, context, n_samples: int = C.ESTIMATE_SAMPLES,
                   seed: int = C.GLOBAL_SEED, normalizer: Optional[Normalizer] = None,
                   truth: Optional[np.ndarray] = None, k: int = C.KNN_K,
                   dim_names: Optional[Sequence[str]] = None, location: Optional[Dict] = None,
                   provenance: Optional[Dict] = None) -> EstimateReport:
    """
    n_samples выборок p(x | контекст). context - нормированное окно (R, m)
    (None для безусловного потока); truth - выборки истинного распределения
    в исходных единицах для оценки KL.
    """
    normalizer = normalizer or Normalizer.identity(0, flow.data_dim)
    embedding = embed_one(encoder, context)
    samples, log_probs = flow.sample(n_samples, embedding, seed=seed)
    raw = normalizer.denormalize_target(samples)
    contours = {}
    if flow.data_dim == 2:
        contours = {level: normalizer.denormalize_target(line)
                    for level, line in flow.confidence_contours(embedding).items()}
    report = EstimateReport(
        samples=raw,
        log_probs=log_probs - normalizer.log_abs_det,
        dim_names=list(dim_names or [f"x{i}" for i in range(flow.data_dim)]),
        contours=contours,
        location=dict(location or {}),
        provenance=dict(provenance or {}, seed=seed),
    )
    if truth is not None:
        truth = np.asarray(truth, dtype=np.float64).reshape(-1, flow.data_dim)
        report.truth = truth
        if len(truth) > k:
            kl = KlConfig(k=k, seed=seed)
            report.kl = kl.estimate(raw, truth)
            report.kl_per_dimension = kl.estimate_per_dimension(raw, truth)
    logger.debug(f"Оценка {report.location}: среднее {np.round(report.mean, 6).tolist()}")
    return report


def joint_state_param_estimate(flow: FlowModel, encoder, context, n_samples: int = C.ESTIMATE_SAMPLES,
                               seed: int = C.GLOBAL_SEED, normalizer: Optional[Normalizer] = None,
                               state_dim: int = 3, initial: Optional[SirState] = None,
                               overlay_steps: int = C.SIR_STEPS, dt: float = C.SIR_DT,
                               **kwargs) -> EstimateReport:
    """
    Совместная оценка (S, I, R, beta, gamma). В отчет добавляются средние и std
    параметров и номинальная траектория SIR при средних параметрах.
    """
    if flow.data_dim != state_dim + 2:
        raise DimensionError(f"поток обучен на d={flow.data_dim}, для совместной оценки нужно {state_dim + 2}")
    if "dim_names" not in kwargs and state_dim == len(SIR_NAMES):
        kwargs["dim_names"] = [*SIR_NAMES, "beta", "gamma"]
    report = estimate_state(flow, encoder, context, n_samples, seed, normalizer, **kwargs)
    params = report.samples[:, state_dim:]
    beta_mean, gamma_mean = params.mean(axis=0)
    report.parameters = {
        "beta_mean": float(beta_mean), "beta_std": float(params[:, 0].std()),
        "gamma_mean": float(gamma_mean), "gamma_std": float(params[:, 1].std()),
    }
    overlay = sir_simulate(SirParams(beta=float(beta_mean), gamma=float(gamma_mean), noise_sigma=0.0, dt=dt),
                           initial or SirState(), overlay_steps, seed)
    report.overlay = overlay.nominal
    return report
