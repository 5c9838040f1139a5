import json
import os

import numpy as np
import pandas as pd
import pytest

from config import constants as C
from frame.command_line import CommandLine
from src.core.run_config import RunConfig

SMALL_MODEL = ["--iterations", "0", "--batch-size", "8", "--layers", "1", "--hidden", "4",
               "--context-features", "2", "--window", "4", "--encoder", "mlp"]


def run(*argv):
    return CommandLine().run(list(argv))


@pytest.fixture
def sir_dataset(output_root):
    assert run("simulate", "--system", "sir", "--steps", "60", "--seed", "7") == 0
    return str(output_root / "datasets" / "sir_seed7.csv")


@pytest.fixture
def checkpoint(sir_dataset, output_root):
    assert run("train", "--dataset", sir_dataset, "--seed", "7", *SMALL_MODEL) == 0
    return str(output_root / "checkpoints" / "sir_seed7_mlp_seed7.ckpt")


# Коды выхода
def test_unknown_flag_is_a_configuration_error(output_root, capsys):
    assert run("simulate", "--system", "sir", "--sigma-vee", "1") == 2
    assert "--sigma-vee" in capsys.readouterr().err


def test_missing_command_and_help(output_root):
    assert run() == 2
    assert run("--help") == 0


def test_unknown_config_section_is_rejected(output_root, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"nonsense": {"x": 1}}), encoding="utf-8")
    assert run("--config", str(path), "show-config") == 2


# simulate
def test_simulate_is_reproducible_under_seed(output_root):
    first, second = output_root / "a.csv", output_root / "b.csv"
    assert run("simulate", "--system", "sir", "--steps", "30", "--seed", "7", "--output", str(first)) == 0
    assert run("simulate", "--system", "sir", "--steps", "30", "--seed", "7", "--output", str(second)) == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.with_suffix(".json").exists()


def test_full_scale_vehicle_size_is_configured(output_root):
    manager = CommandLine().manager
    command = manager.commands["simulate"]
    args = manager.build_parser().parse_args(["simulate", "--system", "vehicle", "--full-scale"])
    command.on_enter(args, RunConfig())
    assert command.config.get("vehicle", "trajectories") == C.VEHICLE_TRAJECTORIES_FULL
    explicit = manager.build_parser().parse_args(["simulate", "--system", "vehicle", "--full-scale",
                                                  "--trajectories", "3"])
    command.on_enter(explicit, RunConfig())
    assert command.config.get("vehicle", "trajectories") == 3


def test_seed_before_command_is_respected(output_root):
    assert run("--seed", "5", "simulate", "--system", "two-moons", "--points", "20") == 0
    assert (output_root / "datasets" / "two-moons_seed5.csv").exists()


# show-config
def test_show_config_prints_sources(output_root, capsys, tmp_path):
    assert run("show-config", "--seed", "3") == 0
    out = capsys.readouterr().out
    assert "general.seed" in out
    assert "[flag]" in out
    assert run("--show-config") == 0
    assert "train.iterations" in capsys.readouterr().out

    export = tmp_path / "config.json"
    assert run("show-config", "--export", str(export)) == 0
    with open(export, encoding="utf-8") as f:
        assert "train" in json.load(f)


def test_show_config_with_command_prints_then_runs(output_root, capsys):
    assert run("--show-config", "simulate", "--system", "sir", "--steps", "10", "--seed", "4") == 0
    out = capsys.readouterr().out
    assert "general.seed" in out
    assert "rollout.window_days" in out
    assert (output_root / "datasets" / "sir_seed4.csv").exists()


# train / estimate / evaluate
def test_train_writes_checkpoint_and_log(checkpoint):
    assert os.path.exists(checkpoint)
    assert os.path.exists(checkpoint.replace(".ckpt", "_trainlog.csv"))


def test_estimate_writes_report(checkpoint, sir_dataset, output_root):
    assert run("estimate", "--checkpoint", checkpoint, "--dataset", sir_dataset, "--at", "t=20",
               "--samples", "40", "--truth-samples", "40") == 0
    path = output_root / "reports" / "estimate_sir_seed7_mlp_seed7_t20.json"
    with open(path, encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["dims"] == ["S", "I", "R"]
    assert summary["location"]["target_index"] == 21


def test_evaluating_one_checkpoint_twice_gives_zero_differences(checkpoint, sir_dataset, output_root):
    assert run("evaluate", "--checkpoint", checkpoint, checkpoint, "--dataset", sir_dataset, "--at", "t=20",
               "--samples", "30", "--pairs", "3") == 0
    table = pd.read_csv(output_root / "reports" / "comparison.csv")
    diffs = [c for c in table.columns if "-0:" in c]
    assert len(diffs) == 3
    values = table[diffs].to_numpy(dtype=float)
    assert np.all(np.nan_to_num(values) == 0.0)


def test_rollout_writes_bands(checkpoint, sir_dataset, output_root):
    assert run("rollout", "--checkpoint", checkpoint, "--dataset", sir_dataset, "--steps", "3",
               "--samples", "20") == 0
    bands = pd.read_csv(output_root / "reports" / "rollout_sir_seed7_mlp_seed7_forward_R4_bands.csv")
    assert sorted(bands["step"].unique().tolist()) == [1, 2, 3]


def test_rollout_window_days(checkpoint, sir_dataset, output_root):
    assert run("rollout", "--checkpoint", checkpoint, "--dataset", sir_dataset, "--window-days", "7",
               "--samples", "20") == 0
    bands = pd.read_csv(output_root / "reports" / "rollout_sir_seed7_mlp_seed7_forward_R4_bands.csv")
    assert sorted(bands["step"].unique().tolist()) == list(range(1, 8))
    assert run("rollout", "--checkpoint", checkpoint, "--dataset", sir_dataset, "--window-days", "5") == 2


# ingest
def write_external(path, rows):
    lines = ["date,S,I,R"] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def test_ingest_exit_codes(output_root, tmp_path):
    good = write_external(tmp_path / "good.csv", [("2020-03-01", 0.99, 0.01, 0.0),
                                                  ("2020-03-02", 0.98, 0.015, 0.005)])
    assert run("ingest", good) == 0
    assert (output_root / "datasets" / "good.csv").exists()
    bad = write_external(tmp_path / "bad.csv", [("2020-03-01", 0.5, 0.1, 0.1)])
    assert run("ingest", bad) == 1
