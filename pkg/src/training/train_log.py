from typing import Dict, List

import numpy as np
import pandas as pd

from src.core.errors import NonFiniteError

LOG_COLUMNS = ["iter", "total", "nll", "kinetic", "prior", "grad_norm", "wallclock_ms"]


class TrainLog:
    """Журнал обучения: одна запись на итерацию"""

    def __init__(self):
        self.records: List[Dict[str, float]] = []

    def __len__(self):
        return len(self.records)

    def append(self, iteration: int, breakdown: Dict[str, float], grad_norm: float, wallclock_ms: float):
        values = [breakdown["total"], breakdown["nll"], breakdown["kinetic"], breakdown["prior"], grad_norm]
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(f"неконечные значения в журнале: {breakdown}", where=f"итерация {iteration}")
        self.records.append({"iter": iteration, **{k: breakdown[k] for k in ("total", "nll", "kinetic", "prior")},
                             "grad_norm": grad_norm, "wallclock_ms": wallclock_ms})

    def column(self, name: str) -> np.ndarray:
        return np.array([record[name] for record in self.records])

    def moving_average(self, name: str, window: int = 100) -> np.ndarray:
        values = self.column(name)
        if len(values) < window:
            return np.array([values.mean()]) if len(values) else values
        return np.convolve(values, np.ones(window) / window, mode="valid")

    def final(self) -> Dict[str, float]:
        return dict(self.records[-1]) if self.records else {}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.records, columns=LOG_COLUMNS)
        frame["iter"] = frame["iter"].astype(np.int64)
        return frame

    def save_csv(self, path: str):
        from src.dynamics.dataset_io import write_frame  # Ленивый импорт
        write_frame(self.to_frame(), path)

    @classmethod
    def load_csv(cls, path: str) -> "TrainLog":
        log = cls()
        log.records = pd.read_csv(path, float_precision="round_trip").to_dict(orient="records")
        return log
