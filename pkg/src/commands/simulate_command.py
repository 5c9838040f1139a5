import argparse

from config import constants as C
from src.dynamics import (TrajectorySet, constant_velocity, sir_ensemble, sir_simulate, two_moons_set,
                          vehicle_dataset)
from src.dynamics.dataset_io import write_dataset
from .base_command import BaseCommand

SYSTEMS = ("vehicle", "sir", "sir-ensemble", "two-moons")


class SimulateCommand(BaseCommand):
    """Генерация набора данных одной из систем"""

    name = "simulate"
    help = "сгенерировать набор данных (vehicle | sir | sir-ensemble | two-moons)"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--system", choices=SYSTEMS, required=True)
        parser.add_argument("--steps", type=int, help="записей на траекторию")
        parser.add_argument("--trajectories", type=int, help="число траекторий (vehicle, sir-ensemble)")
        parser.add_argument("--full-scale", action="store_true",
                            help=f"vehicle: {C.VEHICLE_TRAJECTORIES_FULL} траекторий вместо настольного масштаба")
        parser.add_argument("--points", type=int, help="число точек (two-moons)")
        parser.add_argument("--noise", type=float, help="шум точек (two-moons)")
        parser.add_argument("--dt", type=float)
        # автомобиль
        parser.add_argument("--c1", type=float)
        parser.add_argument("--c2", type=float)
        parser.add_argument("--sigma-v", type=float)
        parser.add_argument("--sigma-phi", type=float)
        parser.add_argument("--switch-time", type=float)
        parser.add_argument("--velocity", type=float)
        # SIR
        parser.add_argument("--beta", type=float)
        parser.add_argument("--gamma", type=float)
        parser.add_argument("--noise-sigma", type=float, help="наблюдательный шум SIR")
        parser.add_argument("--output", help="путь CSV (по умолчанию datasets/<system>_seed<seed>.csv)")

    def configure(self, args: argparse.Namespace):
        if args.system == "vehicle":
            self.config.apply_overrides("vehicle", {
                "steps": args.steps, "trajectories": self.vehicle_trajectories(args), "dt": args.dt,
                "c1": args.c1, "c2": args.c2, "sigma_v": args.sigma_v, "sigma_phi": args.sigma_phi,
                "switch_time": args.switch_time, "velocity": args.velocity,
            })
        elif args.system in ("sir", "sir-ensemble"):
            self.config.apply_overrides("sir", {
                "steps": args.steps, "dt": args.dt, "beta": args.beta, "gamma": args.gamma,
                "noise_sigma": args.noise_sigma,
                "ensemble_size": args.trajectories if args.system == "sir-ensemble" else None,
            })
        else:
            self.config.apply_overrides("two_moons", {"points": args.points, "noise": args.noise})

    @staticmethod
    def vehicle_trajectories(args: argparse.Namespace):
        if args.trajectories is None and args.full_scale:
            return C.VEHICLE_TRAJECTORIES_FULL
        return args.trajectories

    def build(self, system: str):
        seed = self.seed
        if system == "vehicle":
            section = self.config.section("vehicle")
            trajectories = vehicle_dataset(section["trajectories"], section["steps"], self.config.vehicle_params(),
                                           seed, constant_velocity(section["velocity"]))
            return trajectories, section
        if system == "sir":
            section = self.config.section("sir")
            trajectory = sir_simulate(self.config.sir_params(), self.config.sir_initial(), section["steps"], seed)
            return TrajectorySet([trajectory], {"system": "sir", "seed": seed}), section
        if system == "sir-ensemble":
            section = self.config.section("sir")
            trajectories = sir_ensemble(tuple(section["beta_range"]), tuple(section["gamma_range"]),
                                        section["ensemble_size"], self.config.sir_initial(), seed,
                                        n_steps=section["steps"], noise_sigma=section["noise_sigma"],
                                        dt=section["dt"])
            return trajectories, section
        section = self.config.section("two_moons")
        return two_moons_set(section["points"], section["noise"], seed), section

    def execute(self, args: argparse.Namespace) -> int:
        trajectories, section = self.build(args.system)
        path = self.output_path(args.output, "datasets", f"{args.system}_seed{self.seed}.csv")
        metadata = write_dataset(trajectories, path, extra={"params": section})
        print(f"{path}: {metadata['n_trajectories']} траекторий, {metadata['n_records']} строк")
        return 0
