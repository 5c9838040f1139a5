"""
Целевая функция обучения:

    L = l1 * E[-log p(x)]
      + l2 * 1/(L-1) sum_l ||f_{l+1}(x) - f_l(x)||_2      (кинетический член)
      + l3 * 1/(L-1) sum_{l<L} -log p_Z(f_l(x))           (априорный член)
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import constants as C
from src.core.errors import ConfigError, NonFiniteError
from src.diffcore import Tensor, ops
from src.flow import DensityValue, FlowModel, gaussian_log_prob

logger = logging.getLogger(__name__)

Batch = Tuple[Optional[np.ndarray], np.ndarray]


@dataclass
class LossWeights:
    lambda1: float = C.LAMBDA_NLL
    lambda2: float = C.LAMBDA_KINETIC
    lambda3: float = C.LAMBDA_PRIOR

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ConfigError("lambda1 должен быть положительным", fields=["lambda1"])
        bad = [name for name in ("lambda2", "lambda3") if getattr(self, name) < 0]
        if bad:
            raise ConfigError("веса регуляризации должны быть неотрицательными", fields=bad)

    def to_dict(self) -> Dict:
        return asdict(self)


def embed_contexts(encoder, contexts: Optional[np.ndarray]) -> Optional[Tensor]:
    if encoder is None or contexts is None:
        return None
    return encoder.embed(contexts)


def nll_from_density(density: DensityValue) -> Tensor:
    log_prob = density.log_prob
    finite = np.isfinite(log_prob.data)
    if not finite.all():
        raise NonFiniteError("неконечный log p", where="nll", indices=np.flatnonzero(~finite).tolist())
    return ops.neg(ops.reduce("mean", log_prob))


def nll_term(flow: FlowModel, encoder, batch: Batch) -> Tensor:
    """Среднее по пакету -log p(цель | embed(контекст))"""
    contexts, targets = batch
    return nll_from_density(flow.log_prob(targets, embed_contexts(encoder, contexts)))


def kinetic_term(per_layer_outputs: List[Tensor]) -> Tensor:
    layers = len(per_layer_outputs)
    if layers < 2:
        logger.warning(f"Кинетический член не определен для L={layers}, возвращается 0")
        return Tensor(0.0)
    total = None
    for current, following in zip(per_layer_outputs[:-1], per_layer_outputs[1:]):
        step = ops.l2norm(ops.sub(following, current), axis=1)
        total = step if total is None else ops.add(total, step)
    return ops.scale(ops.reduce("mean", total), 1.0 / (layers - 1))


def prior_term(per_layer_outputs: List[Tensor], mean: Tensor, log_std: Tensor) -> Tensor:
    """Средний -log p_Z промежуточных выходов f_1 ... f_{L-1} под условной базой"""
    layers = len(per_layer_outputs)
    if layers < 2:
        logger.warning(f"Априорный член не определен для L={layers}, возвращается 0")
        return Tensor(0.0)
    total = None
    for output in per_layer_outputs[:-1]:
        term = ops.neg(gaussian_log_prob(output, mean, log_std))
        total = term if total is None else ops.add(total, term)
    return ops.scale(ops.reduce("mean", total), 1.0 / (layers - 1))


def total_loss(flow: FlowModel, encoder, batch: Batch, weights: LossWeights) -> Tuple[Tensor, Dict[str, float]]:
    """
    Взвешенная сумма членов. Члены с нулевым весом вычисляются для журнала,
    но в граф суммы не входят.
    """
    contexts, targets = batch
    context = embed_contexts(encoder, contexts)
    density = flow.log_prob(targets, context)
    nll = nll_from_density(density)
    kinetic = kinetic_term(density.per_layer_outputs)
    mean, log_std = flow.base_params(context, len(targets))
    prior = prior_term(density.per_layer_outputs, mean, log_std)

    total = ops.scale(nll, weights.lambda1)
    if weights.lambda2 > 0:
        total = ops.add(total, ops.scale(kinetic, weights.lambda2))
    if weights.lambda3 > 0:
        total = ops.add(total, ops.scale(prior, weights.lambda3))
    breakdown = {"total": total.item(), "nll": nll.item(), "kinetic": kinetic.item(), "prior": prior.item()}
    return total, breakdown
