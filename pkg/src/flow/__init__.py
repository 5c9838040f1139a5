from .base_distribution import ConditionalDiagonalNormal, DiagonalNormal, gaussian_log_prob
from .checkpoint import Checkpoint
from .flow_model import DensityValue, FlowConfig, FlowModel
from .layers import FlowLayer, LULinear, MaskedAffineAutoregressive, Permutation

__all__ = ['ConditionalDiagonalNormal', 'DiagonalNormal', 'gaussian_log_prob', 'Checkpoint',
           'DensityValue', 'FlowConfig', 'FlowModel',
           'FlowLayer', 'LULinear', 'MaskedAffineAutoregressive', 'Permutation']
