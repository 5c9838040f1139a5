import argparse
import os

import numpy as np

from config import constants as C
from src.core.errors import CheckpointError, ConfigError, ZeroDenominatorError
from src.dynamics.dataset_io import write_frame, write_json
from src.inference import bands, mape, rollout
from src.inference.rollout import AGGREGATIONS
from .base_command import BaseCommand
from .session import open_session


class RolloutCommand(BaseCommand):
    """Рекурсивный прогноз с подачей оценок обратно в окно"""

    name = "rollout"
    help = "рекурсивный прогноз вперед или назад с полосами ±n sigma"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--dataset", required=True)
        parser.add_argument("--trajectory", type=int, default=0)
        parser.add_argument("--start", type=int, help="индекс первого наблюдения начального окна")
        parser.add_argument("--steps", type=int, help="число шагов прогноза")
        parser.add_argument("--window-days", type=int, choices=C.ROLLOUT_WINDOWS,
                            help="окно прогноза в сутках; заменяет --steps")
        parser.add_argument("--direction", choices=("forward", "backward"),
                            help="должно совпадать с направлением обучения")
        parser.add_argument("--window", type=int, help="длина окна R; должна совпадать с обучением")
        parser.add_argument("--aggregation", choices=AGGREGATIONS)
        parser.add_argument("--samples", type=int)
        parser.add_argument("--sigma", type=float, help="ширина полос в sigma")
        parser.add_argument("--output-dir")

    def configure(self, args: argparse.Namespace):
        self.config.apply_overrides("rollout", {"steps": args.steps, "window_days": args.window_days,
                                                "aggregation": args.aggregation,
                                                "band_sigma": args.sigma})
        self.config.apply_overrides("estimate", {"samples": args.samples})

    def execute(self, args: argparse.Namespace) -> int:
        session = open_session(self, args.checkpoint, args.dataset)
        if not session.conditional:
            raise ConfigError("прогноз требует условного потока", fields=["checkpoint"])
        requested = {"direction": args.direction or session.direction, "window": args.window or session.window}
        trained = {"direction": session.direction, "window": session.window}
        if requested != trained:
            raise CheckpointError("окно прогноза не совпадает с окном обучения", expected=trained, actual=requested)

        traj = session.trajectory(args.trajectory)
        start = session.context_start(traj, None, args.start)
        context, first_target, _ = session.context(traj, start)
        config = self.config.rollout_config(session.direction, session.window, session.horizon)
        reports = rollout(session.flow, session.encoder, context, config, self.seed, session.normalizer,
                          dim_names=session.dim_names(), provenance=session.provenance())

        step = 1 if session.direction == "forward" else -1
        targets = first_target + step * np.arange(config.n_steps)
        valid = (targets >= 0) & (targets < len(traj))
        means = np.array([r.mean for r in reports])
        truth = traj.targets(session.include_params)

        summary = {"direction": session.direction, "window": session.window, "steps": config.n_steps,
                   "aggregation": config.aggregation, "start": start, "trajectory": args.trajectory,
                   "target_indices": targets[valid].tolist(), "provenance": session.provenance()}
        if valid.any():
            actual = truth[targets[valid]]
            predicted = means[valid]
            try:
                summary["mape"] = mape(predicted, actual)
                summary["mape_per_dimension"] = [mape(predicted[:, j], actual[:, j]) for j in range(actual.shape[1])]
            except ZeroDenominatorError as e:
                self.logger.warning(f"MAPE не определен: {e}")
                summary["mape"] = None

        directory = args.output_dir or self.rm.get_output_path("reports", "")
        stem = f"rollout_{self.stem(session.checkpoint_path)}_{session.direction}_R{session.window}"
        sigma = self.config.get("rollout", "band_sigma")
        bands_path = os.path.join(directory, f"{stem}_bands.csv")
        write_frame(bands(reports, sigma), bands_path)
        write_json(summary, os.path.join(directory, f"{stem}.json"))
        if summary.get("mape") is not None:
            print(f"MAPE по {int(valid.sum())} шагам: {summary['mape']:.3f}%")
        print(f"полосы: {bands_path}")
        return 0
