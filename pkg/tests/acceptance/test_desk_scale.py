import numpy as np
import pytest

from config import constants as C
from src.dynamics import (SirParams, SirState, VehicleParams, extract_context, make_windows, nearest_arc,
                          point_dataset, sir_ensemble, sir_simulate, trajectory_location, two_moons,
                          vehicle_continuations, vehicle_dataset, vehicle_simulate)
from src.inference import (RolloutConfig, estimate_state, joint_state_param_estimate, kl_knn, mape,
                           rollout)
from src.training import LossWeights, TrainConfig, configs_for, make_models, train

pytestmark = pytest.mark.slow

FLOW = {"n_layers": 4, "hidden_features": 32}
ENCODER = {"kind": "mlp", "mlp_hidden": 64, "embed_dim": 8}


def fit(dataset, iterations=3000, batch_size=512, flow=None, seed=3):
    flow_config, encoder_config = configs_for(dataset, flow or FLOW, ENCODER)
    model, encoder = make_models(flow_config, encoder_config)
    config = TrainConfig(iterations=iterations, batch_size=batch_size, learning_rate=1e-3, seed=seed,
                         weights=LossWeights(lambda1=1.0, lambda2=0.0, lambda3=0.0), record_wallclock=False)
    _, log = train(dataset, model, encoder, config)
    return model, encoder, log


def gaussian_nll(targets: np.ndarray) -> float:
    """NLL лучшей одиночной гауссианы (совпадение моментов) на тех же данных"""
    d = targets.shape[1]
    covariance = np.cov(targets, rowvar=False, bias=True)
    return 0.5 * (d * np.log(2.0 * np.pi) + np.linalg.slogdet(covariance)[1] + d)


# Две луны
def test_two_moons_flow_beats_single_gaussian_and_covers_both_arcs():
    dataset = point_dataset(two_moons(C.TWO_MOONS_POINTS, C.TWO_MOONS_NOISE, seed=0))
    flow, _, log = fit(dataset)
    assert log.moving_average("nll", 100)[-1] < gaussian_nll(dataset.targets)

    samples, _ = flow.sample(1000, None, seed=1)
    labels = nearest_arc(dataset.normalizer.denormalize_target(samples))
    assert np.bincount(labels, minlength=2).min() >= 250


# Автомобиль
def test_vehicle_prediction_at_switch_keeps_both_branches():
    # слабый шум: ветви psi разнесены сильнее, чем случайное блуждание руля
    p = VehicleParams(sigma_v=0.001, sigma_phi=0.0025)
    window, horizon = 5, 45
    dataset = make_windows(vehicle_dataset(500, C.VEHICLE_STEPS, p, seed=1), R=window, horizon=horizon,
                           context_noise_sigma=0.0, seed=1)
    assert len(dataset) >= 50_000
    flow, encoder, _ = fit(dataset, flow={"n_layers": 6, "hidden_features": 32})

    held_out = vehicle_simulate(C.VEHICLE_STEPS, p, seed=99)
    start = trajectory_location("at", window, horizon)
    context, _ = extract_context(held_out, start, window, "forward", horizon, dataset.normalizer)
    truth = vehicle_continuations(held_out, start + window - 1, horizon, 1000, p, seed=2)
    report = estimate_state(flow, encoder, context, n_samples=1000, seed=3, normalizer=dataset.normalizer,
                            truth=truth)

    # ось наибольшего разброса истинных продолжений разделяет ветви
    center = truth.mean(axis=0)
    axis = np.linalg.svd(truth - center, full_matrices=False)[2][0]
    split = np.median((truth - center) @ axis)
    side = (report.samples - center) @ axis > split
    assert min(side.mean(), 1.0 - side.mean()) >= 0.2

    gaussian = np.random.default_rng(4).multivariate_normal(center, np.cov(truth, rowvar=False), 1000)
    assert report.kl < kl_knn(gaussian, truth)


# SIR
@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_sir_estimates_track_true_state(direction):
    trajectory = sir_simulate(SirParams(), SirState(), C.SIR_STEPS, seed=1)
    dataset = make_windows(trajectory, R=C.WINDOW_LENGTH, direction=direction, horizon=1,
                           context_noise_sigma=0.0, seed=1)
    flow, encoder, _ = fit(dataset)

    errors = []
    locations = np.random.default_rng(5).choice(len(dataset), 100, replace=False)
    for number, index in enumerate(locations):
        contexts, _ = dataset.batch(np.array([index]))
        report = estimate_state(flow, encoder, contexts[0], n_samples=1000, seed=number,
                                normalizer=dataset.normalizer)
        errors.append(np.abs(report.mean - trajectory.states[dataset.target_index[index]]))
    mean_error = np.mean(errors, axis=0)
    assert mean_error[0] <= 0.01
    assert mean_error[1] <= 0.02
    assert mean_error[2] <= 0.01


def test_rollout_on_noiseless_sir_stays_within_ten_percent():
    dataset = make_windows(sir_simulate(SirParams(), SirState(), C.SIR_STEPS, seed=1), R=C.WINDOW_LENGTH,
                           horizon=1, context_noise_sigma=0.0, seed=1)
    flow, encoder, _ = fit(dataset)

    noiseless = sir_simulate(SirParams(noise_sigma=0.0), SirState(), C.SIR_STEPS, seed=1)
    context, target = extract_context(noiseless, 200, C.WINDOW_LENGTH, "forward", 1, dataset.normalizer)
    for days in C.ROLLOUT_WINDOWS:
        config = RolloutConfig(window=C.WINDOW_LENGTH, window_size_days=days, n_samples=1000)
        reports = rollout(flow, encoder, context, config, seed=6, normalizer=dataset.normalizer)
        predicted = np.array([r.mean for r in reports])
        assert mape(predicted, noiseless.states[target:target + days]) < 10.0


def test_joint_estimate_recovers_beta_on_held_out_trajectories():
    window, end = 28, 150
    ensemble = sir_ensemble(C.SIR_BETA_RANGE, C.SIR_GAMMA_RANGE, 200, SirState(), seed=1, n_steps=300)
    dataset = make_windows(ensemble, R=window, horizon=1, include_params=True, context_noise_sigma=0.0, seed=1)
    flow, encoder, _ = fit(dataset, iterations=5000)

    # отложенные beta - внутри интервала, в 0.002 от границ
    held_out = sir_ensemble((0.022, 0.038), C.SIR_GAMMA_RANGE, 20, SirState(), seed=1001, n_steps=300)
    betas, errors = [], []
    for number, trajectory in enumerate(held_out):
        context, _ = extract_context(trajectory, end - window + 1, window, "forward", 1, dataset.normalizer)
        report = joint_state_param_estimate(flow, encoder, context, n_samples=1000, seed=number,
                                            normalizer=dataset.normalizer, overlay_steps=10)
        betas.append(report.samples[:, 3])
        errors.append(abs(report.parameters["beta_mean"] - trajectory.params[0]))
    betas = np.concatenate(betas)
    low, high = C.SIR_BETA_RANGE
    assert np.mean((betas >= low) & (betas <= high)) >= 0.99
    assert np.mean(errors) <= 0.005
