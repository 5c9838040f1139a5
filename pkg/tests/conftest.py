import logging

import numpy as np
import pytest

from src.core.resource_manager import resource_manager
from src.dynamics import SirParams, SirState, make_windows, sir_simulate
from src.encoders import EncoderConfig, EncoderFactory
from src.flow import FlowConfig, FlowModel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_flow():
    """Условный поток d=2 с контекстом 3, параметры сдвинуты от тождественных"""
    flow = FlowModel(FlowConfig(data_dim=2, n_layers=2, hidden_features=8, context_features=3, base_hidden=8),
                     np.random.default_rng(7))
    flow.perturb(np.random.default_rng(8), 0.2)
    return flow


@pytest.fixture
def tiny_encoder_config():
    return EncoderConfig(kind="transformer", input_dim=2, embed_dim=3, window=4, model_dim=8,
                         n_encoder_layers=1, n_decoder_layers=1, n_heads=2, ff_dim=16)


@pytest.fixture
def tiny_encoder(tiny_encoder_config):
    return EncoderFactory.create(tiny_encoder_config, np.random.default_rng(9))


@pytest.fixture
def sir_trajectory():
    return sir_simulate(SirParams(beta=0.3, gamma=0.1, noise_sigma=0.001, dt=1.0), SirState(0.99, 0.01, 0.0),
                        60, seed=3)


@pytest.fixture
def sir_windows(sir_trajectory):
    return make_windows(sir_trajectory, R=4, direction="forward", horizon=1, context_noise_sigma=0.0, seed=3)


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    """Отдельный корень вывода и чистый кэш на каждый тест"""
    monkeypatch.setenv("FLOWFILTER_OUTPUT_ROOT", str(tmp_path / "runs"))
    resource_manager.clear_cache()
    resource_manager.set_output_root(None)
    yield tmp_path / "runs"
    resource_manager.clear_cache()


@pytest.fixture(autouse=True)
def quiet_logs():
    logging.getLogger("src").setLevel(logging.WARNING)
    yield
