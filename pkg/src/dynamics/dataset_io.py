"""
Файлы наборов данных: CSV (traj_id, step, t, наблюдения, состояния[, beta, gamma])
и JSON-сопровождение с метаданными. Плюс прием внешних данных SIR
в формате date, S, I, R и обратный экспорт.
"""
import json
import logging
import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config import constants as C
from src.core.errors import SchemaError
from .sir import SIR_NAMES
from .trajectory import Trajectory, TrajectorySet
from .windows import Normalizer

logger = logging.getLogger(__name__)

EXTERNAL_COLUMNS = ["date", "S", "I", "R"]


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def write_json(data: Dict, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def read_json(path: str) -> Dict:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_frame(frame: pd.DataFrame, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=C.CSV_FLOAT_FORMAT, lineterminator="\n")


def dataset_frame(trajectories: TrajectorySet) -> pd.DataFrame:
    first = trajectories[0]
    columns = ["traj_id", "step", "t", *first.observation_names, *first.state_names]
    tagged = trajectories.param_tags is not None
    if tagged:
        columns += ["beta", "gamma"]
    blocks = []
    for number, traj in enumerate(trajectories):
        n = len(traj)
        parts = [np.full((n, 1), number), np.arange(n)[:, None], traj.times[:, None],
                 traj.observations, traj.states]
        if tagged:
            parts.append(np.tile(traj.params, (n, 1)))
        blocks.append(np.hstack(parts))
    frame = pd.DataFrame(np.vstack(blocks), columns=columns)
    frame["traj_id"] = frame["traj_id"].astype(np.int64)
    frame["step"] = frame["step"].astype(np.int64)
    return frame


def write_dataset(trajectories: TrajectorySet, path: str, extra: Optional[Dict] = None) -> Dict:
    """Пишет CSV и сопровождение; возвращает записанные метаданные"""
    first = trajectories[0]
    all_obs = np.vstack([t.observations for t in trajectories])
    all_states = np.vstack([t.states for t in trajectories])
    metadata = dict(trajectories.metadata)
    metadata.update(extra or {})
    metadata.update({
        "schema_version": C.DATASET_SCHEMA_VERSION,
        "system": first.system,
        "observation_names": list(first.observation_names),
        "state_names": list(first.state_names),
        "n_trajectories": len(trajectories),
        "n_records": trajectories.n_records,
        "param_tags": trajectories.param_tags is not None,
        "normalization": Normalizer.fit(all_obs, all_states).to_dict(),
    })
    if all(t.psi is not None for t in trajectories):
        metadata["psi"] = [float(t.psi) for t in trajectories]
    write_frame(dataset_frame(trajectories), path)
    write_json(metadata, sidecar_path(path))
    logger.info(f"✓ Набор {first.system} записан: {path} ({trajectories.n_records} строк)")
    return metadata


def read_dataset(path: str) -> TrajectorySet:
    """Читает набор, записанный write_dataset; схема сверяется с сопровождением"""
    if not os.path.exists(path):
        raise SchemaError(f"файл набора не найден: {path}")
    meta_path = sidecar_path(path)
    if not os.path.exists(meta_path):
        raise SchemaError(f"нет файла метаданных {meta_path}")
    metadata = read_json(meta_path)
    if metadata.get("schema_version") != C.DATASET_SCHEMA_VERSION:
        raise SchemaError(f"версия схемы {metadata.get('schema_version')}, ожидается {C.DATASET_SCHEMA_VERSION}")

    frame = pd.read_csv(path, float_precision="round_trip")
    obs_names = list(metadata["observation_names"])
    state_names = list(metadata["state_names"])
    expected = ["traj_id", "step", "t", *obs_names, *state_names]
    if metadata.get("param_tags"):
        expected += ["beta", "gamma"]
    if list(frame.columns) != expected:
        raise SchemaError(f"колонки {list(frame.columns)} не совпадают с {expected}")

    psi = metadata.get("psi")
    trajectories: List[Trajectory] = []
    for number, group in frame.groupby("traj_id", sort=True):
        group = group.sort_values("step")
        trajectories.append(Trajectory(
            system=metadata["system"],
            times=group["t"].to_numpy(dtype=np.float64),
            observations=group[obs_names].to_numpy(dtype=np.float64).reshape(len(group), len(obs_names)),
            states=group[state_names].to_numpy(dtype=np.float64),
            observation_names=tuple(obs_names),
            state_names=tuple(state_names),
            params=group[["beta", "gamma"]].to_numpy(dtype=np.float64)[0] if metadata.get("param_tags") else None,
            psi=psi[int(number)] if psi else None,
            seed=metadata.get("seed"),
        ))
    logger.debug(f"Прочитан набор {path}: {len(trajectories)} траекторий")
    return TrajectorySet(trajectories, metadata)


def ingest_external_sir(path: str) -> TrajectorySet:
    """
    Проверяет внешний CSV date, S, I, R: строго возрастающие даты и
    S+I+R в допустимых пределах. Номера строк в ошибках считаются
    от 1 (без заголовка).
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SchemaError(f"не удалось прочитать {path}: {e}")
    if list(frame.columns) != EXTERNAL_COLUMNS:
        raise SchemaError(f"ожидаются колонки {EXTERNAL_COLUMNS}, получены {list(frame.columns)}")
    if frame.empty:
        raise SchemaError("файл не содержит строк")

    dates = pd.to_datetime(frame["date"], errors="coerce")
    bad_dates = (np.flatnonzero(dates.isna().to_numpy()) + 1).tolist()
    if bad_dates:
        raise SchemaError("нераспознанные даты", rows=bad_dates)
    steps = np.diff(dates.to_numpy()).astype("timedelta64[s]").astype(np.int64)
    not_increasing = (np.flatnonzero(steps <= 0) + 2).tolist()
    if not_increasing:
        raise SchemaError("даты не возрастают строго", rows=not_increasing)

    values = frame[["S", "I", "R"]].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    non_numeric = (np.flatnonzero(~np.isfinite(values).all(axis=1)) + 1).tolist()
    if non_numeric:
        raise SchemaError("нечисловые значения S, I, R", rows=non_numeric)
    totals = values.sum(axis=1)
    low, high = C.EXTERNAL_SUM_BOUNDS
    out_of_bounds = (np.flatnonzero((totals < low) | (totals > high)) + 1).tolist()
    if out_of_bounds:
        raise SchemaError(f"S+I+R вне [{low}, {high}]", rows=out_of_bounds)

    days = (dates - dates.iloc[0]).dt.total_seconds().to_numpy() / 86400.0
    trajectory = Trajectory(
        system="sir-external",
        times=days,
        observations=values.copy(),
        states=values.copy(),
        observation_names=tuple(f"obs_{name}" for name in SIR_NAMES),
        state_names=SIR_NAMES,
    )
    logger.info(f"✓ Внешние данные SIR приняты: {path}, {len(frame)} строк")
    return TrajectorySet([trajectory], {"source": os.path.basename(path),
                                        "dates": frame["date"].astype(str).tolist()})


def export_external_sir(dataset: TrajectorySet, path: str):
    """Обратный экспорт принятого набора в date, S, I, R"""
    dates = dataset.metadata.get("dates")
    if dates is None:
        raise SchemaError("в метаданных набора нет дат (набор не из ingest)")
    states = dataset[0].states
    frame = pd.DataFrame({"date": dates, "S": states[:, 0], "I": states[:, 1], "R": states[:, 2]})
    write_frame(frame, path)
    logger.info(f"Экспорт в {path}: {len(frame)} строк")
