from .estimator import EstimateReport, estimate_state, joint_state_param_estimate
from .kl_estimator import KlConfig, kl_knn, kl_knn_per_dimension
from .metrics import mape, mean_nll
from .rollout import RolloutConfig, bands, rollout

__all__ = ['EstimateReport', 'estimate_state', 'joint_state_param_estimate',
           'KlConfig', 'kl_knn', 'kl_knn_per_dimension', 'mape', 'mean_nll',
           'RolloutConfig', 'bands', 'rollout']
