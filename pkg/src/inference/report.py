import os
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from src.dynamics.dataset_io import write_frame, write_json
from .estimator import EstimateReport


def save_report(report: EstimateReport, directory: str, stem: str) -> List[str]:
    """JSON-сводка + CSV выборок (+ контуры и траектория при средних параметрах)"""
    written = []
    summary_path = os.path.join(directory, f"{stem}.json")
    write_json(report.summary(), summary_path)
    written.append(summary_path)

    samples_path = os.path.join(directory, f"{stem}_samples.csv")
    write_frame(pd.DataFrame(report.samples, columns=report.dim_names), samples_path)
    written.append(samples_path)

    if report.contours:
        frames = []
        for level, line in sorted(report.contours.items()):
            frame = pd.DataFrame(line, columns=report.dim_names)
            frame.insert(0, "idx", np.arange(len(line)))
            frame.insert(0, "level", level)
            frames.append(frame)
        contours_path = os.path.join(directory, f"{stem}_contours.csv")
        write_frame(pd.concat(frames, ignore_index=True), contours_path)
        written.append(contours_path)

    if report.overlay is not None:
        overlay_path = os.path.join(directory, f"{stem}_overlay.csv")
        frame = pd.DataFrame(report.overlay, columns=report.dim_names[:report.overlay.shape[1]])
        frame.insert(0, "step", np.arange(len(frame)))
        write_frame(frame, overlay_path)
        written.append(overlay_path)
    return written


def layer_paths_frame(paths: np.ndarray, dim_names: Sequence[str]) -> pd.DataFrame:
    """(L, n, d) -> строки layer, idx, компоненты"""
    layers, n, _ = paths.shape
    frame = pd.DataFrame(paths.reshape(layers * n, -1), columns=list(dim_names))
    frame.insert(0, "idx", np.tile(np.arange(n), layers))
    frame.insert(0, "layer", np.repeat(np.arange(1, layers + 1), n))
    return frame


def comparison_table(results: Dict[str, Dict[str, Sequence[float]]], dim_names: Sequence[str]) -> pd.DataFrame:
    """
    results[checkpoint][row] = значения по компонентам.
    Колонки checkpoint:dim и разности с первой контрольной точкой.
    """
    names = list(results)
    if not names:
        return pd.DataFrame()
    rows = list(results[names[0]])
    table = pd.DataFrame(index=pd.Index(rows, name="row"))
    for name in names:
        for j, dim in enumerate(dim_names):
            table[f"{name}:{dim}"] = [results[name][row][j] for row in rows]
    reference = names[0]
    for name in names[1:]:
        for dim in dim_names:
            table[f"{name}-{reference}:{dim}"] = table[f"{name}:{dim}"] - table[f"{reference}:{dim}"]
    return table.reset_index()
