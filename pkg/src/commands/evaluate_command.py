import argparse
import os
from collections import OrderedDict
from typing import Dict, List

import numpy as np

from src.core.errors import ZeroDenominatorError
from src.dynamics.dataset_io import write_frame
from src.inference import mape, mean_nll
from src.inference.report import comparison_table
from .base_command import BaseCommand
from .estimate_command import run_estimate
from .session import EvaluationSession, open_session


def per_dimension_mape(predicted: np.ndarray, actual: np.ndarray) -> List[float]:
    values = []
    for j in range(len(actual)):
        try:
            values.append(mape(predicted[j], actual[j]))
        except ZeroDenominatorError:
            values.append(float("nan"))
    return values


class EvaluateCommand(BaseCommand):
    """Сравнение контрольных точек по KL, NLL и MAPE на одном наборе"""

    name = "evaluate"
    help = "таблица KL / NLL / MAPE по нескольким контрольным точкам"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--checkpoint", nargs="+", required=True)
        parser.add_argument("--dataset", required=True)
        parser.add_argument("--at", nargs="+", default=["before", "at", "after"])
        parser.add_argument("--trajectory", type=int, default=0)
        parser.add_argument("--samples", type=int)
        parser.add_argument("--truth-samples", type=int)
        parser.add_argument("--pairs", type=int, default=100, help="окон для среднего NLL")
        parser.add_argument("--output", help="CSV таблицы (по умолчанию reports/comparison.csv)")

    def configure(self, args: argparse.Namespace):
        self.config.apply_overrides("estimate", {"samples": args.samples})

    def evaluate_one(self, session: EvaluationSession, args: argparse.Namespace) -> Dict[str, List[float]]:
        estimate = self.config.section("estimate")
        n_samples = estimate["samples"]
        n_truth = args.truth_samples or n_samples
        rows: Dict[str, List[float]] = OrderedDict()
        locations = args.at if session.conditional else [None]
        for at in locations:
            report = run_estimate(session, args.trajectory, at, None, n_samples, n_truth, estimate["k"], self.seed)
            label = at or "unconditional"
            if report.kl_per_dimension is not None:
                rows[f"kl@{label}"] = list(report.kl_per_dimension)
            if "target_value" in report.location:
                rows[f"mape@{label}"] = per_dimension_mape(report.mean, np.asarray(report.location["target_value"]))

        if session.conditional:
            windows = session.windows()
            pick = np.sort(np.random.default_rng([self.seed, 0x11]).choice(
                len(windows), size=min(args.pairs, len(windows)), replace=False))
            contexts, targets = windows.batch(pick)
            embedding_source = session.encoder
        else:
            points = session.trajectories[0].states
            pick = np.sort(np.random.default_rng([self.seed, 0x11]).choice(
                len(points), size=min(args.pairs, len(points)), replace=False))
            contexts, targets = None, session.normalizer.normalize_target(points[pick])
            embedding_source = None
        nll = mean_nll(session.flow, embedding_source, contexts, targets, session.normalizer,
                       n_samples=n_samples, seed=self.seed)
        rows["nll"] = nll["per_dimension"]
        rows["nll_total"] = [nll["total"]] * len(rows["nll"])
        return rows

    def execute(self, args: argparse.Namespace) -> int:
        results: Dict[str, Dict[str, List[float]]] = OrderedDict()
        dim_names = None
        for index, path in enumerate(args.checkpoint):
            session = open_session(self, path, args.dataset)
            names = session.dim_names()
            if dim_names is None:
                dim_names = names
            elif names != dim_names:
                self.logger.warning(f"компоненты {names} не совпадают с {dim_names}")
            label = f"{index}:{self.stem(session.checkpoint_path)}"
            self.logger.info(f"Оценка {label}")
            results[label] = self.evaluate_one(session, args)

        table = comparison_table(results, dim_names)
        output = self.output_path(args.output, "reports", "comparison.csv")
        write_frame(table, output)
        print(table.to_string(index=False))
        print(f"таблица: {output}")
        return 0
