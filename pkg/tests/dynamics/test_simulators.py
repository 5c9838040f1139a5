import numpy as np
import pytest
from scipy import stats

from src.core.errors import DomainError, InitialConditionError, TrajectoryTooShortError
from src.dynamics import (SirParams, SirState, VehicleParams, VehicleState, nearest_arc, rk4_step,
                          sir_continuations, sir_ensemble, sir_rhs, sir_simulate, trajectory_location,
                          two_moons, two_moons_set, vehicle_continuations, vehicle_dataset, vehicle_simulate,
                          vehicle_step)
from src.dynamics.sir import integrate
from src.dynamics.two_moons import moon_labels
from src.dynamics.vehicle import psi_revealed


def integrate_to(initial: SirState, p: SirParams, dt: float, total_time: float) -> np.ndarray:
    state = initial
    for _ in range(int(round(total_time / dt))):
        state = rk4_step(state, p, dt)
    return state.as_array()


# SIR
def test_sir_rhs_sums_to_zero():
    rates = sir_rhs(SirState(0.7, 0.2, 0.1), SirParams(beta=0.4, gamma=0.1))
    assert abs(sum(rates)) < 1e-15
    assert rates[0] == pytest.approx(-0.4 * 0.2 * 0.7)


def test_rk4_conserves_population_over_long_run():
    states = integrate(SirState(), SirParams(), 10_001)
    assert np.max(np.abs(states.sum(axis=1) - 1.0)) < 1e-9
    assert np.all(np.diff(states[:, 0]) <= 0.0)
    assert np.all(np.diff(states[:, 2]) >= 0.0)


def test_rk4_is_fourth_order():
    p = SirParams(beta=0.5, gamma=0.1)
    initial = SirState(0.9, 0.1, 0.0)
    reference = integrate_to(initial, p, 1.0 / 256.0, 10.0)
    coarse = np.abs(integrate_to(initial, p, 0.5, 10.0) - reference).max()
    fine = np.abs(integrate_to(initial, p, 0.25, 10.0) - reference).max()
    assert 12.0 <= coarse / fine <= 40.0


def test_rk4_rejects_non_positive_step():
    with pytest.raises(DomainError):
        rk4_step(SirState(), SirParams(), dt=0.0)


def test_sir_params_must_be_positive():
    with pytest.raises(DomainError):
        SirParams(beta=0.0)


def test_sir_simulate_is_deterministic_and_noisy():
    p = SirParams(noise_sigma=0.01)
    first = sir_simulate(p, SirState(), 50, seed=7)
    second = sir_simulate(p, SirState(), 50, seed=7)
    np.testing.assert_array_equal(first.observations, second.observations)
    assert first.observations.shape == (50, 3)
    assert np.std(first.observations - first.states) == pytest.approx(0.01, rel=0.2)
    np.testing.assert_array_equal(first.states, first.nominal)


def test_sir_simulate_rejects_bad_initial_condition_and_length():
    with pytest.raises(InitialConditionError):
        sir_simulate(SirParams(), SirState(0.5, 0.1, 0.1), 10, seed=0)
    with pytest.raises(TrajectoryTooShortError):
        sir_simulate(SirParams(), SirState(), 0, seed=0)


def test_sir_ensemble_tags_parameters_inside_ranges():
    ensemble = sir_ensemble((0.02, 0.04), (0.005, 0.025), 12, SirState(), seed=4, n_steps=20)
    tags = ensemble.param_tags
    assert tags.shape == (12, 2)
    assert np.all((tags[:, 0] >= 0.02) & (tags[:, 0] <= 0.04))
    assert np.all((tags[:, 1] >= 0.005) & (tags[:, 1] <= 0.025))
    assert ensemble[3].targets(include_params=True).shape == (20, 5)


def test_infections_have_single_interior_peak():
    infected = integrate(SirState(0.99, 0.01, 0.0), SirParams(beta=0.03, gamma=0.01), 3000)[:, 1]
    peak = int(np.argmax(infected))
    assert 0 < peak < len(infected) - 1
    assert np.all(np.diff(infected[:peak + 1]) > 0.0)
    assert np.all(np.diff(infected[peak:]) < 0.0)


def test_ensemble_betas_are_uniform():
    ensemble = sir_ensemble((0.02, 0.04), (0.005, 0.025), 1000, SirState(), seed=11, n_steps=1)
    betas = ensemble.param_tags[:, 0]
    assert stats.kstest(betas, "uniform", args=(0.02, 0.02)).pvalue > 0.01


def test_sir_ensemble_rejects_inverted_interval():
    with pytest.raises(DomainError):
        sir_ensemble((0.04, 0.02), (0.005, 0.025), 3, SirState(), seed=0)


def test_sir_continuations_center_on_nominal_future():
    p = SirParams(beta=0.3, gamma=0.1, noise_sigma=0.002)
    state = np.array([0.9, 0.08, 0.02])
    samples = sir_continuations(state, p, 3, 4000, seed=1)
    expected = integrate(SirState.from_array(state), p, 4)[-1]
    np.testing.assert_allclose(samples.mean(axis=0), expected, atol=2e-4)
    np.testing.assert_allclose(samples.std(axis=0), 0.002, rtol=0.1)


# Автомобиль
def test_vehicle_step_straight_line_without_noise():
    state = vehicle_step(VehicleState(v=2.0), VehicleParams())
    assert state.p_x == pytest.approx(0.2)
    assert state.p_y == pytest.approx(0.0)
    assert state.t == pytest.approx(0.1)


def test_vehicle_step_heading_north():
    state = vehicle_step(VehicleState(theta=np.pi / 2, v=2.0), VehicleParams())
    assert state.p_y == pytest.approx(0.2, abs=1e-15)
    assert abs(state.p_x) < 1e-15


def test_switch_term_drives_steering_after_switch():
    state = vehicle_step(VehicleState(t=6.0), VehicleParams(psi=1.0))
    assert state.phi == pytest.approx(0.1 * 1.0 * 0.1 * np.cos(0.5 * 6.0), abs=1e-15)
    assert state.phi == pytest.approx(-0.0098999, abs=1e-7)
    before = vehicle_step(VehicleState(t=5.0), VehicleParams(psi=1.0))
    assert before.phi == 0.0


def test_switch_values_are_uniform():
    dataset = vehicle_dataset(1000, 1, VehicleParams(), seed=6)
    psis = np.array([t.psi for t in dataset])
    assert stats.kstest(psis, "uniform", args=(-1.0, 2.0)).pvalue > 0.01


def test_vehicle_switch_splits_trajectories_only_after_switch_time():
    p = VehicleParams()
    left = vehicle_simulate(150, p, seed=5, psi=-1.0)
    right = vehicle_simulate(150, p, seed=5, psi=1.0)
    before = left.times <= 5.5 + 1e-9
    np.testing.assert_allclose(left.observations[before], right.observations[before], atol=1e-12, rtol=0)
    assert np.abs(left.observations[-1] - right.observations[-1]).max() > 1e-3


def test_vehicle_params_validation():
    with pytest.raises(DomainError):
        VehicleParams(psi=1.5)
    with pytest.raises(DomainError):
        VehicleParams(dt=0.0)


def test_vehicle_dataset_size_and_psi_range():
    dataset = vehicle_dataset(4, 30, VehicleParams(), seed=2)
    assert dataset.n_records == 120
    assert all(-1.0 <= t.psi <= 1.0 for t in dataset)
    assert dataset[0].kinematics.shape == (30, 5)


def test_vehicle_continuations_redraw_psi_only_before_switch():
    p = VehicleParams().noiseless()
    trajectory = vehicle_simulate(150, p, seed=3)
    early = vehicle_continuations(trajectory, 30, 40, 500, p, seed=1)
    late = vehicle_continuations(trajectory, 100, 40, 500, p, seed=1)
    assert early.shape == (500, 2)
    assert early.std(axis=0).max() > 1e-4
    assert late.std(axis=0).max() == 0.0
    np.testing.assert_allclose(late[0], trajectory.kinematics[140, :2], atol=1e-12)


def test_context_ending_at_switch_keeps_both_branches():
    p = VehicleParams().noiseless()
    trajectory = vehicle_simulate(150, p, seed=3)
    at_switch = vehicle_continuations(trajectory, 55, 10, 500, p, seed=1)
    assert at_switch.std(axis=0).max() > 1e-3
    # положение в записи 57 от psi еще не зависит, в записи 58 - уже зависит
    hidden = vehicle_continuations(trajectory, 57, 10, 500, p, seed=1)
    revealed = vehicle_continuations(trajectory, 58, 10, 500, p, seed=1)
    assert hidden.std(axis=0).max() > 1e-3
    assert revealed.std(axis=0).max() == 0.0
    assert not psi_revealed(5.7, p)
    assert psi_revealed(5.8, p)


def test_redrawn_psi_leaves_observed_positions_unchanged():
    p = VehicleParams()
    trajectory = vehicle_simulate(150, p, seed=4)
    current = vehicle_continuations(trajectory, 57, 0, 50, p, seed=2)
    np.testing.assert_allclose(current, np.tile(trajectory.kinematics[57, :2], (50, 1)), atol=1e-12, rtol=0)
    following = vehicle_continuations(trajectory, 57, 1, 200, p, seed=2)
    assert following[:, 1].std() > 0.0


def test_trajectory_location_puts_context_end_at_requested_time():
    start = trajectory_location("at", window=5, horizon=1, direction="forward")
    assert start + 5 - 1 == 55
    assert trajectory_location("before", 5, 1, "forward") == 26
    assert trajectory_location("after", 5, 1, "backward") == 94
    with pytest.raises(DomainError):
        trajectory_location("never", 5, 1)


# Две луны
def test_two_moons_noiseless_points_lie_on_their_arcs():
    points = two_moons(201, noise_sigma=0.0, seed=0)
    assert points.shape == (201, 2)
    np.testing.assert_array_equal(nearest_arc(points), moon_labels(201))


def test_two_moons_mean_matches_arc_centroid():
    sigma, n = 0.1, 10_000
    points = two_moons(n, noise_sigma=sigma, seed=5)
    # центроиды дуг: (0, 2/pi) и (1, 0.5 - 2/pi)
    np.testing.assert_allclose(points.mean(axis=0), [0.5, 0.25], atol=3.0 * sigma / np.sqrt(n))
    assert np.bincount(moon_labels(n)).tolist() == [5000, 5000]


def test_two_moons_dataset_has_no_observations():
    dataset = two_moons_set(100, 0.05, seed=1)
    trajectory = dataset[0]
    assert trajectory.observations.shape == (100, 0)
    assert trajectory.state_names == ("x1", "x2")
    assert dataset.metadata["kind"] == "points"


def test_two_moons_rejects_tiny_sample():
    with pytest.raises(DomainError):
        two_moons(1)
