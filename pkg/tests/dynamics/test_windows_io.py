import numpy as np
import pytest

from src.core.errors import SchemaError, TrajectoryTooShortError, WindowLengthError
from src.dynamics import (Normalizer, extract_context, make_windows, nearest_targets, sir_ensemble,
                          two_moons_set, window_bounds)
from src.dynamics.dataset_io import export_external_sir, ingest_external_sir, read_dataset, write_dataset
from src.dynamics.sir import SirState


def write_external(path, rows):
    lines = ["date,S,I,R"] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


# Окна
def test_forward_windows_count_and_target_index(sir_trajectory, sir_windows):
    assert len(sir_windows) == 60 - 4 - 1 + 1
    assert sir_windows.contexts.shape == (56, 4, 3)
    assert sir_windows.target_index[0] == 4
    expected = sir_windows.normalizer.normalize_target(sir_trajectory.states[4])
    np.testing.assert_allclose(sir_windows.targets[0], expected)


def test_backward_windows_read_observations_in_reverse(sir_trajectory):
    windows = make_windows(sir_trajectory, R=4, direction="backward", horizon=1, context_noise_sigma=0.0)
    assert windows.target_index[0] == 55
    raw = windows.normalizer.denormalize_obs(windows.contexts[0])
    np.testing.assert_allclose(raw, sir_trajectory.observations[[59, 58, 57, 56]], atol=1e-12)


def test_extract_context_matches_windowed_pairs(sir_trajectory, sir_windows):
    context, target = extract_context(sir_trajectory, 10, 4, "forward", 1, sir_windows.normalizer)
    assert target == 14
    np.testing.assert_allclose(context, sir_windows.contexts[10], atol=1e-12)

    backward = make_windows(sir_trajectory, R=4, direction="backward", horizon=1, context_noise_sigma=0.0)
    context, target = extract_context(sir_trajectory, 59, 4, "backward", 1, backward.normalizer)
    assert target == 55
    np.testing.assert_allclose(context, backward.contexts[0], atol=1e-12)


def test_context_noise_is_seeded(sir_trajectory):
    first = make_windows(sir_trajectory, R=4, context_noise_sigma=0.05, seed=1)
    second = make_windows(sir_trajectory, R=4, context_noise_sigma=0.05, seed=1)
    clean = make_windows(sir_trajectory, R=4, context_noise_sigma=0.0)
    np.testing.assert_array_equal(first.contexts, second.contexts)
    assert np.std(first.contexts - clean.contexts) == pytest.approx(0.05, rel=0.2)


def test_window_errors(sir_trajectory):
    with pytest.raises(TrajectoryTooShortError):
        make_windows(sir_trajectory, R=60, horizon=1)
    with pytest.raises(WindowLengthError):
        make_windows(sir_trajectory, R=0)
    with pytest.raises(TrajectoryTooShortError):
        window_bounds(60, 58, 4, "forward", 1)


def test_normalizer_statistics_and_log_det():
    rng = np.random.default_rng(0)
    targets = rng.normal([1.0, -2.0], [2.0, 0.5], size=(500, 2))
    normalizer = Normalizer.fit(np.zeros((500, 0)), targets)
    normalized = normalizer.normalize_target(targets)
    np.testing.assert_allclose(normalized.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(normalized.std(axis=0), 1.0, atol=1e-12)
    assert normalizer.log_abs_det == pytest.approx(np.log(targets.std(axis=0)).sum())
    restored = Normalizer.from_dict(normalizer.to_dict())
    np.testing.assert_array_equal(restored.target_std, normalizer.target_std)


def test_nearest_targets_returns_raw_target_of_matching_context(sir_trajectory, sir_windows):
    found = nearest_targets(sir_windows, sir_windows.contexts[5], 1)
    np.testing.assert_allclose(found[0], sir_trajectory.states[9], atol=1e-12)
    assert nearest_targets(sir_windows, sir_windows.contexts[5], 500).shape == (56, 3)


# Файлы наборов
def test_dataset_round_trip_is_exact(tmp_path):
    ensemble = sir_ensemble((0.2, 0.4), (0.05, 0.15), 3, SirState(0.99, 0.01, 0.0), seed=2, n_steps=15)
    path = str(tmp_path / "ensemble.csv")
    write_dataset(ensemble, path)
    restored = read_dataset(path)
    assert len(restored) == 3
    for original, copy in zip(ensemble, restored):
        np.testing.assert_array_equal(original.observations, copy.observations)
        np.testing.assert_array_equal(original.states, copy.states)
        np.testing.assert_array_equal(original.params, copy.params)


def test_dataset_files_are_byte_identical_for_same_input(tmp_path):
    points = two_moons_set(50, 0.05, seed=4)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset(points, str(first))
    write_dataset(points, str(second))
    assert first.read_bytes() == second.read_bytes()
    assert read_dataset(str(first))[0].observations.shape == (50, 0)


def test_read_dataset_without_sidecar_fails(tmp_path):
    path = tmp_path / "orphan.csv"
    path.write_text("traj_id,step,t\n0,0,0.0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_dataset(str(path))


# Внешние данные
def test_ingest_accepts_valid_file(tmp_path):
    path = write_external(tmp_path / "ok.csv", [("2020-03-01", 0.99, 0.01, 0.0),
                                                 ("2020-03-02", 0.98, 0.015, 0.005),
                                                 ("2020-03-03", 0.97, 0.02, 0.01)])
    dataset = ingest_external_sir(path)
    np.testing.assert_allclose(dataset[0].times, [0.0, 1.0, 2.0])
    assert dataset[0].states.shape == (3, 3)


def test_ingest_reports_rows_with_bad_totals(tmp_path):
    path = write_external(tmp_path / "sum.csv", [("2020-03-01", 0.99, 0.01, 0.0),
                                                  ("2020-03-02", 1.0, 0.3, 0.2),
                                                  ("2020-03-03", 0.97, 0.02, 0.01)])
    with pytest.raises(SchemaError) as info:
        ingest_external_sir(path)
    assert info.value.rows == [2]


def test_ingest_rejects_non_increasing_dates(tmp_path):
    path = write_external(tmp_path / "dates.csv", [("2020-03-01", 0.99, 0.01, 0.0),
                                                    ("2020-03-03", 0.98, 0.015, 0.005),
                                                    ("2020-03-02", 0.97, 0.02, 0.01)])
    with pytest.raises(SchemaError) as info:
        ingest_external_sir(path)
    assert info.value.rows == [3]


def test_ingest_rejects_wrong_columns(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("day,S,I,R\n2020-03-01,0.99,0.01,0.0\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        ingest_external_sir(str(path))


def test_export_then_ingest_reproduces_values(tmp_path):
    path = write_external(tmp_path / "in.csv", [("2020-03-01", 0.99, 0.01, 0.0),
                                                 ("2020-03-02", 0.981, 0.0123, 0.0067),
                                                 ("2020-03-04", 0.97, 0.02, 0.01)])
    dataset = ingest_external_sir(path)
    exported = str(tmp_path / "out.csv")
    export_external_sir(dataset, exported)
    again = ingest_external_sir(exported)
    np.testing.assert_allclose(again[0].states, dataset[0].states, atol=1e-12, rtol=0)
    np.testing.assert_allclose(again[0].times, [0.0, 1.0, 3.0])
