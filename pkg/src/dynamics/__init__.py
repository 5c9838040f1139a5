from .trajectory import Trajectory, TrajectorySet, stream
from .vehicle import (VehicleParams, VehicleState, constant_velocity, trajectory_location,
                      vehicle_continuations, vehicle_dataset, vehicle_simulate, vehicle_step)
from .sir import (SirParams, SirState, rk4_step, sir_continuations, sir_ensemble, sir_rhs,
                  sir_simulate)
from .two_moons import nearest_arc, two_moons, two_moons_set
from .windows import (Normalizer, WindowedDataset, extract_context, make_windows,
                      nearest_targets, point_dataset, window_bounds)

__all__ = [
    'Trajectory', 'TrajectorySet', 'stream',
    'VehicleParams', 'VehicleState', 'constant_velocity', 'trajectory_location',
    'vehicle_continuations', 'vehicle_dataset', 'vehicle_simulate', 'vehicle_step',
    'SirParams', 'SirState', 'rk4_step', 'sir_continuations', 'sir_ensemble', 'sir_rhs',
    'sir_simulate',
    'nearest_arc', 'two_moons', 'two_moons_set',
    'Normalizer', 'WindowedDataset', 'extract_context', 'make_windows',
    'nearest_targets', 'point_dataset', 'window_bounds',
]
