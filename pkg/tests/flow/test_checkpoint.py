import numpy as np
import pytest

from src.core.errors import CheckpointError
from src.dynamics import Normalizer
from src.flow import Checkpoint
from src.training import make_checkpoint, restore_models


@pytest.fixture
def checkpoint(tiny_flow, tiny_encoder):
    normalizer = Normalizer(np.array([0.1, 0.2]), np.array([1.5, 0.5]), np.zeros(2), np.array([2.0, 3.0]))
    return make_checkpoint(tiny_flow, tiny_encoder, normalizer, {"note": "test"})


def test_restored_models_give_identical_densities(checkpoint, tiny_flow, tiny_encoder, rng):
    restored = Checkpoint.from_bytes(checkpoint.to_bytes())
    flow, encoder, normalizer = restore_models(restored)
    observations = rng.normal(size=(5, 4, 2))
    x = rng.normal(size=(5, 2))
    expected = tiny_flow.log_prob(x, tiny_encoder.embed(observations)).log_prob.data
    actual = flow.log_prob(x, encoder.embed(observations)).log_prob.data
    np.testing.assert_array_equal(actual, expected)
    np.testing.assert_array_equal(normalizer.target_std, [2.0, 3.0])
    assert restored.provenance == {"note": "test"}


def test_same_parameters_give_same_bytes(checkpoint, tmp_path):
    first = checkpoint.save(str(tmp_path / "a.ckpt"))
    loaded = Checkpoint.load(first)
    second = loaded.save(str(tmp_path / "b.ckpt"))
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()
    assert loaded.checkpoint_id == checkpoint.checkpoint_id
    assert len(checkpoint.checkpoint_id) == 16


def test_parameter_change_changes_id(checkpoint):
    name = sorted(checkpoint.parameters)[0]
    checkpoint_id = checkpoint.checkpoint_id
    checkpoint.parameters[name] = checkpoint.parameters[name] + 1e-9
    assert checkpoint.checkpoint_id != checkpoint_id


def test_corrupted_blobs_are_rejected(checkpoint):
    blob = checkpoint.to_bytes()
    with pytest.raises(CheckpointError):
        Checkpoint.from_bytes(b"NOTAFLOW" + blob[8:])
    with pytest.raises(CheckpointError):
        Checkpoint.from_bytes(blob[:10])
    with pytest.raises(CheckpointError):
        Checkpoint.from_bytes(blob[:-8])


def test_missing_file_is_a_checkpoint_error(tmp_path):
    with pytest.raises(CheckpointError):
        Checkpoint.load(str(tmp_path / "absent.ckpt"))


def test_sections_strip_prefix(checkpoint):
    flow_part = checkpoint.section("flow")
    encoder_part = checkpoint.section("encoder")
    assert flow_part and encoder_part
    assert len(flow_part) + len(encoder_part) == len(checkpoint.parameters)
    assert not any(name.startswith("flow.") for name in flow_part)
