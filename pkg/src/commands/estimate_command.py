import argparse
import os
from typing import Optional

from src.dynamics import SirState
from src.inference import EstimateReport, estimate_state, joint_state_param_estimate
from src.inference.report import save_report
from .base_command import BaseCommand
from .session import EvaluationSession, open_session


def location_label(at: Optional[str], start: int) -> str:
    if at is None:
        return f"start{start}"
    return at.replace("=", "").replace(".", "p")


def run_estimate(session: EvaluationSession, traj_index: int, at: Optional[str], start: Optional[int],
                 n_samples: int, n_truth: int, k: int, seed: int) -> EstimateReport:
    """Одна оценка в выбранной точке траектории (или безусловная выборка)"""
    names = session.dim_names()
    if not session.conditional:
        truth = session.truth_samples(traj_index, None, None, None, n_truth, seed)
        return estimate_state(session.flow, None, None, n_samples, seed, session.normalizer, truth=truth, k=k,
                              dim_names=names, location={"kind": "unconditional"},
                              provenance=session.provenance())

    traj = session.trajectory(traj_index)
    start = session.context_start(traj, at, start)
    context, target, rows = session.context(traj, start)
    truth = session.truth_samples(traj_index, context, rows, target, n_truth, seed)
    location = {"trajectory": traj_index, "at": at, "start": start, "target_index": target,
                "target_time": float(traj.times[target]), "direction": session.direction}
    kwargs = dict(truth=truth, k=k, dim_names=names, location=location, provenance=session.provenance())
    if session.include_params:
        state_dim = traj.state_dim
        initial = SirState.from_array(traj.states[0]) if state_dim == 3 else None
        dt = float(traj.times[1] - traj.times[0]) if len(traj) > 1 else 1.0
        return joint_state_param_estimate(session.flow, session.encoder, context, n_samples, seed,
                                          session.normalizer, state_dim=state_dim, initial=initial,
                                          overlay_steps=len(traj), dt=dt, **kwargs)
    report = estimate_state(session.flow, session.encoder, context, n_samples, seed, session.normalizer, **kwargs)
    report.location["target_value"] = session.target_value(traj, target).tolist()
    return report


class EstimateCommand(BaseCommand):
    """Оценка плотности состояния в выбранных точках траектории"""

    name = "estimate"
    help = "оценить p(x | контекст) в точке траектории"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--dataset", required=True)
        parser.add_argument("--at", nargs="+", help="before | at | after | t=<время> (можно несколько)")
        parser.add_argument("--start", type=int, help="индекс первого наблюдения контекста")
        parser.add_argument("--trajectory", type=int, default=0)
        parser.add_argument("--samples", type=int)
        parser.add_argument("--truth-samples", type=int, help="выборки истинного распределения (по умолчанию = --samples)")
        parser.add_argument("--k", type=int, help="сосед для оценки KL")
        parser.add_argument("--output-dir", help="каталог отчетов (по умолчанию reports/)")

    def configure(self, args: argparse.Namespace):
        self.config.apply_overrides("estimate", {"samples": args.samples, "k": args.k})

    def execute(self, args: argparse.Namespace) -> int:
        session = open_session(self, args.checkpoint, args.dataset)
        estimate = self.config.section("estimate")
        n_samples = estimate["samples"]
        n_truth = args.truth_samples or n_samples
        directory = args.output_dir or self.rm.get_output_path("reports", "")
        locations = args.at or [None]

        for at in locations:
            report = run_estimate(session, args.trajectory, at, args.start, n_samples, n_truth,
                                  estimate["k"], self.seed)
            label = location_label(at, report.location.get("start", 0))
            stem = f"estimate_{self.stem(session.checkpoint_path)}_{label}"
            written = save_report(report, directory, stem)
            kl = f", KL={report.kl:.4f}" if report.kl is not None else ""
            print(f"{label}: среднее {[round(v, 6) for v in report.mean.tolist()]}{kl}")
            for path in written:
                self.logger.debug(f"записан {path}")
            print(f"отчет: {os.path.join(directory, stem + '.json')}")
        return 0
