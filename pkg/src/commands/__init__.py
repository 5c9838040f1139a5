from .base_command import BaseCommand
from .estimate_command import EstimateCommand
from .evaluate_command import EvaluateCommand
from .ingest_command import IngestCommand
from .rollout_command import RolloutCommand
from .show_config_command import ShowConfigCommand
from .simulate_command import SimulateCommand
from .train_command import TrainCommand

__all__ = ['BaseCommand', 'EstimateCommand', 'EvaluateCommand', 'IngestCommand', 'RolloutCommand',
           'ShowConfigCommand', 'SimulateCommand', 'TrainCommand']
