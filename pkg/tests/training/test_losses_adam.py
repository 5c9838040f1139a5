import numpy as np
import pytest

from src.core.errors import ConfigError
from src.diffcore import Tape, Tensor, backward, parameter
from src.flow import FlowConfig, FlowModel
from src.training import (AdamState, LossWeights, TrainConfig, adam_step, clip_gradients, kinetic_term,
                          nll_term, prior_term, total_loss)

LOG_2PI = np.log(2.0 * np.pi)


def identity_flow(d=2, layers=2):
    return FlowModel(FlowConfig(data_dim=d, n_layers=layers, hidden_features=8, context_features=0),
                     np.random.default_rng(0))


def perturbed_flow(seed):
    flow = FlowModel(FlowConfig(data_dim=2, n_layers=2, hidden_features=8, context_features=0),
                     np.random.default_rng(seed))
    flow.perturb(np.random.default_rng(seed + 100), 0.3)
    return flow


# Члены функции потерь
def test_nll_of_identity_flow_at_origin():
    assert nll_term(identity_flow(), None, (None, np.zeros((4, 2)))).item() == pytest.approx(LOG_2PI, abs=1e-12)


def test_nll_is_invariant_to_duplicated_rows(rng):
    flow = perturbed_flow(1)
    targets = rng.normal(size=(6, 2))
    single = nll_term(flow, None, (None, targets)).item()
    doubled = nll_term(flow, None, (None, np.vstack([targets, targets]))).item()
    assert doubled == pytest.approx(single, abs=1e-12)


def test_one_adam_step_lowers_nll_on_fixed_batch():
    changes = []
    for seed in range(10):
        flow = perturbed_flow(seed)
        targets = np.random.default_rng(seed).normal(1.0, 2.0, size=(64, 2))
        params = flow.parameters()
        with Tape() as tape:
            loss = nll_term(flow, None, (None, targets))
        backward(tape, loss, params)
        adam_step(params, [p.grad for p in params], AdamState.zeros(params), TrainConfig(learning_rate=1e-3))
        changes.append(nll_term(flow, None, (None, targets)).item() - loss.item())
    assert np.mean(changes) < 0.0


def test_kinetic_term_values():
    x = Tensor(np.random.default_rng(0).normal(size=(5, 2)))
    assert kinetic_term([x, x, x]).item() == 0.0
    shifted = Tensor(x.data + np.array([3.0, 4.0]))
    assert kinetic_term([x, shifted]).item() == pytest.approx(5.0)
    scaled = [Tensor(2.5 * x.data), Tensor(2.5 * shifted.data)]
    assert kinetic_term(scaled).item() == pytest.approx(2.5 * 5.0)


def test_kinetic_and_prior_vanish_for_single_layer():
    x = Tensor(np.ones((3, 2)))
    assert kinetic_term([x]).item() == 0.0
    assert prior_term([x], Tensor(np.zeros((3, 2))), Tensor(np.zeros((3, 2)))).item() == 0.0


def test_prior_term_values():
    zeros = Tensor(np.zeros((4, 2)))
    mean, log_std = Tensor(np.zeros((4, 2))), Tensor(np.zeros((4, 2)))
    final = Tensor(np.ones((4, 2)))
    assert prior_term([zeros, zeros, final], mean, log_std).item() == pytest.approx(LOG_2PI)
    moved = Tensor(np.full((4, 2), 0.5))
    assert prior_term([moved, final], mean, log_std).item() > LOG_2PI
    # одно промежуточное значение - это его NLL под базой
    assert prior_term([moved, final], mean, log_std).item() == pytest.approx(LOG_2PI + 0.25)


def test_total_loss_reduces_to_weighted_nll(rng):
    flow = perturbed_flow(2)
    batch = (None, rng.normal(size=(8, 2)))
    total, breakdown = total_loss(flow, None, batch, LossWeights(lambda1=1.7, lambda2=0.0, lambda3=0.0))
    assert total.item() == 1.7 * nll_term(flow, None, batch).item()
    assert breakdown["kinetic"] > 0.0


def test_breakdown_sums_to_total(rng):
    flow = perturbed_flow(3)
    weights = LossWeights(lambda1=1.0, lambda2=0.3, lambda3=0.05)
    total, breakdown = total_loss(flow, None, (None, rng.normal(size=(8, 2))), weights)
    weighted = (weights.lambda1 * breakdown["nll"] + weights.lambda2 * breakdown["kinetic"]
                + weights.lambda3 * breakdown["prior"])
    assert total.item() == pytest.approx(weighted, abs=1e-12)
    assert breakdown["total"] == total.item()


def test_loss_weight_validation():
    with pytest.raises(ConfigError):
        LossWeights(lambda1=0.0)
    with pytest.raises(ConfigError) as info:
        LossWeights(lambda2=-1.0)
    assert info.value.fields == ["lambda2"]


# Adam
def test_zero_gradient_leaves_parameters_unchanged():
    w = parameter(np.array([1.0, -2.0]))
    adam_step([w], [np.zeros(2)], AdamState.zeros([w]), TrainConfig())
    np.testing.assert_array_equal(w.data, [1.0, -2.0])


def test_first_adam_step_has_learning_rate_size():
    w = parameter(np.array([0.0]))
    config = TrainConfig(learning_rate=0.01)
    state, norm = adam_step([w], [np.array([1.0])], AdamState.zeros([w]), config)
    assert w.data[0] == pytest.approx(-0.01, abs=1e-6)
    assert state.step == 1
    assert norm == 1.0


def test_adam_runs_are_bit_identical():
    results = []
    for _ in range(2):
        w = parameter(np.array([3.0, -1.0, 0.5]))
        state = AdamState.zeros([w])
        config = TrainConfig(learning_rate=0.05)
        for _ in range(100):
            state, _ = adam_step([w], [2.0 * w.data], state, config)
        results.append(w.data.copy())
    np.testing.assert_array_equal(results[0], results[1])
    assert np.abs(results[0]).max() < 3.0


def test_gradient_clipping_uses_global_norm():
    clipped, norm = clip_gradients([np.array([3.0]), np.array([4.0])], 1.0)
    assert norm == 5.0
    np.testing.assert_allclose(np.concatenate(clipped), [0.6, 0.8])
    untouched, _ = clip_gradients([np.array([3.0])], None)
    np.testing.assert_array_equal(untouched[0], [3.0])


def test_train_config_validation():
    with pytest.raises(ConfigError) as info:
        TrainConfig(iterations=-1, batch_size=0)
    assert info.value.fields == ["iterations", "batch_size"]
