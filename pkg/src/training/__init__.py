from .adam import AdamState, TrainConfig, adam_step, clip_gradients
from .losses import LossWeights, kinetic_term, nll_term, prior_term, total_loss
from .train_log import TrainLog
from .trainer import Trainer, configs_for, make_checkpoint, make_models, restore_models, train

__all__ = ['AdamState', 'TrainConfig', 'adam_step', 'clip_gradients',
           'LossWeights', 'kinetic_term', 'nll_term', 'prior_term', 'total_loss',
           'TrainLog', 'Trainer', 'configs_for', 'make_checkpoint', 'make_models', 'restore_models', 'train']
