import numpy as np
import pytest

from src.core.errors import (DegenerateDistanceError, DimensionError, InsufficientSamplesError,
                             ZeroDenominatorError)
from src.dynamics import Normalizer
from src.flow import FlowConfig, FlowModel
from src.inference import KlConfig, kl_knn, kl_knn_per_dimension, mape, mean_nll

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


# KL по ближайшим соседям
def test_kl_of_identical_distributions_is_near_zero():
    estimates = []
    for trial in range(10):
        rng = np.random.default_rng(trial)
        estimates.append(kl_knn(rng.standard_normal(10_000), rng.standard_normal(10_000), k=1))
    assert abs(np.mean(estimates)) < 0.1


def test_kl_of_shifted_gaussians_matches_closed_form():
    estimates = []
    for trial in range(5):
        rng = np.random.default_rng(100 + trial)
        estimates.append(kl_knn(rng.standard_normal(10_000), rng.normal(1.0, 1.0, 10_000), k=1))
    assert np.mean(estimates) == pytest.approx(0.5, abs=0.15)


def test_kl_error_shrinks_with_sample_size():
    errors = {}
    for n in (1_000, 10_000):
        trial_errors = []
        for trial in range(20):
            rng = np.random.default_rng(500 + trial)
            trial_errors.append(abs(kl_knn(rng.standard_normal(n), rng.normal(1.0, 1.0, n), k=1) - 0.5))
        errors[n] = np.mean(trial_errors)
    assert errors[10_000] < errors[1_000]


def test_config_estimate_matches_function(rng):
    p_hat, p = rng.normal(size=(300, 2)), rng.normal(0.5, 1.0, size=(300, 2))
    config = KlConfig(k=3, seed=5)
    assert config.estimate(p_hat, p) == kl_knn(p_hat, p, k=3, seed=5)
    assert config.estimate_per_dimension(p_hat, p) == kl_knn_per_dimension(p_hat, p, k=3, seed=5)


def test_kl_is_scale_invariant(rng):
    p_hat = rng.normal(size=(500, 2))
    p = rng.normal(0.3, 1.2, size=(400, 2))
    assert kl_knn(3.7 * p_hat, 3.7 * p, k=2) == pytest.approx(kl_knn(p_hat, p, k=2), abs=1e-9)


def test_kl_sample_requirements():
    with pytest.raises(InsufficientSamplesError):
        kl_knn(np.zeros(1), np.zeros(5), k=1)
    with pytest.raises(InsufficientSamplesError):
        KlConfig(k=0)
    with pytest.raises(DimensionError):
        kl_knn(np.zeros((5, 2)), np.zeros((5, 3)))


def test_duplicate_estimate_points_are_jittered(rng):
    p_hat = np.repeat(rng.normal(size=(50, 1)), 2, axis=0)
    assert np.isfinite(kl_knn(p_hat, rng.normal(size=100)))


def test_point_on_reference_sample_is_degenerate():
    with pytest.raises(DegenerateDistanceError):
        kl_knn(np.array([0.0, 1.0, 2.0]), np.array([0.0, 5.0]))


def test_per_dimension_kl_has_one_value_per_component(rng):
    values = kl_knn_per_dimension(rng.normal(size=(300, 3)), rng.normal(size=(300, 3)))
    assert len(values) == 3


# MAPE
def test_mape_values():
    actual = np.array([1.0, -2.0, 4.0])
    assert mape(actual, actual) == 0.0
    assert mape(1.1 * actual, actual) == pytest.approx(10.0)
    assert mape([3.0], [2.0]) == pytest.approx(50.0)


def test_mape_reports_zero_denominators():
    with pytest.raises(ZeroDenominatorError) as info:
        mape([1.0, 2.0, 3.0], [1.0, 0.0, 1e-12])
    assert info.value.indices == [1, 2]
    with pytest.raises(DimensionError):
        mape([1.0], [1.0, 2.0])


# Средний NLL
def standard_flow(d):
    return FlowModel(FlowConfig(data_dim=d, n_layers=1, hidden_features=4, context_features=0),
                     np.random.default_rng(0))


def test_mean_nll_of_standard_density_at_origin():
    result = mean_nll(standard_flow(1), None, None, np.zeros((3, 1)), per_dimension=False)
    assert result["total"] == pytest.approx(HALF_LOG_2PI, abs=1e-12)
    assert result["n_pairs"] == 3


def test_mean_nll_in_raw_units_adds_log_scale():
    normalizer = Normalizer(np.zeros(0), np.ones(0), np.zeros(1), np.array([np.e]))
    result = mean_nll(standard_flow(1), None, None, np.zeros((2, 1)), normalizer, per_dimension=False)
    assert result["total"] == pytest.approx(HALF_LOG_2PI + 1.0, abs=1e-12)


def test_per_dimension_nll_of_product_density_sums_to_joint(rng):
    states = rng.normal(0.0, 0.3, size=(3, 2))
    result = mean_nll(standard_flow(2), None, None, states, n_samples=5000, seed=4)
    assert len(result["per_dimension"]) == 2
    assert sum(result["per_dimension"]) == pytest.approx(result["total"], abs=0.1)
