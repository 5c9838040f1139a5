import argparse
import os

from src.dynamics import make_windows, point_dataset
from src.dynamics.dataset_io import write_frame
from src.encoders.base_encoder import ENCODER_KINDS
from src.inference.report import layer_paths_frame
from src.training import configs_for, make_models, train
from .base_command import BaseCommand


class TrainCommand(BaseCommand):
    """Обучение потока с оператором обусловливания на наборе данных"""

    name = "train"
    help = "обучить условный поток"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--dataset", required=True, help="CSV набора (simulate/ingest)")
        parser.add_argument("--encoder", choices=ENCODER_KINDS)
        parser.add_argument("--iterations", type=int)
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--lr", type=float)
        parser.add_argument("--clip-norm", type=float)
        parser.add_argument("--nll-lambda", type=float)
        parser.add_argument("--kinetic-lambda", type=float)
        parser.add_argument("--prior-lambda", type=float)
        parser.add_argument("--window", type=int, help="длина контекста R")
        parser.add_argument("--horizon", type=int)
        parser.add_argument("--direction", choices=("forward", "backward"))
        parser.add_argument("--include-params", action="store_true", default=None,
                            help="совместная оценка состояния и (beta, gamma)")
        parser.add_argument("--context-noise", type=float, help="шум контекста в нормированных единицах")
        parser.add_argument("--layers", type=int)
        parser.add_argument("--hidden", type=int)
        parser.add_argument("--context-features", type=int)
        parser.add_argument("--model-dim", type=int)
        parser.add_argument("--heads", type=int)
        parser.add_argument("--output", help="путь контрольной точки")
        parser.add_argument("--log", help="путь CSV журнала обучения")
        parser.add_argument("--no-wallclock", action="store_true",
                            help="писать 0 в колонку wallclock_ms (побайтно воспроизводимый журнал)")
        parser.add_argument("--layer-paths", type=int, default=0,
                            help="записать выходы слоев для N точек набора")

    def configure(self, args: argparse.Namespace):
        self.config.apply_overrides("train", {
            "iterations": args.iterations, "batch_size": args.batch_size, "learning_rate": args.lr,
            "clip_norm": args.clip_norm, "lambda1": args.nll_lambda, "lambda2": args.kinetic_lambda,
            "lambda3": args.prior_lambda, "record_wallclock": False if args.no_wallclock else None,
        })
        self.config.apply_overrides("windows", {
            "window": args.window, "horizon": args.horizon, "direction": args.direction,
            "include_params": args.include_params, "context_noise_sigma": args.context_noise,
        })
        self.config.apply_overrides("flow", {
            "n_layers": args.layers, "hidden_features": args.hidden, "context_features": args.context_features,
        })
        self.config.apply_overrides("encoder", {"kind": args.encoder, "model_dim": args.model_dim,
                                                "n_heads": args.heads})

    def build_dataset(self, path: str):
        trajectories = self.rm.load_dataset(path)
        names = list(trajectories[0].state_names)
        source = {"system": trajectories.system, "seed": trajectories.metadata.get("seed"),
                  "path": os.path.basename(path), "target_names": names}
        if trajectories.metadata.get("kind") == "points" or trajectories[0].observation_dim == 0:
            return point_dataset(trajectories[0].states, metadata=dict(source, window=0, horizon=0, direction="none"))
        w = self.config.section("windows")
        dataset = make_windows(trajectories, w["window"], w["direction"], w["horizon"], w["include_params"],
                               w["context_noise_sigma"], self.seed)
        dataset.metadata.update(path=source["path"],
                                target_names=names + (["beta", "gamma"] if w["include_params"] else []))
        return dataset

    def execute(self, args: argparse.Namespace) -> int:
        dataset_path = self.input_path(args.dataset, "datasets")
        dataset = self.build_dataset(dataset_path)

        encoder_overrides = self.config.encoder_overrides()
        encoder_overrides["embed_dim"] = self.config.get("flow", "context_features")
        flow_config, encoder_config = configs_for(dataset, self.config.flow_overrides(), encoder_overrides)
        flow, encoder = make_models(flow_config, encoder_config)
        train_config = self.config.train_config()

        kind = encoder_config.kind if encoder_config is not None else "none"
        default_stem = f"{self.stem(dataset_path)}_{kind}_seed{self.seed}"
        checkpoint_path = self.output_path(args.output, "checkpoints", f"{default_stem}.ckpt")
        log_path = args.log or os.path.splitext(checkpoint_path)[0] + "_trainlog.csv"

        checkpoint, log = train(dataset, flow, encoder, train_config,
                                provenance={"config": self.config.as_dict()["train"]})
        checkpoint.save(checkpoint_path)
        log.save_csv(log_path)

        if args.layer_paths > 0:
            count = min(args.layer_paths, len(dataset))
            contexts, targets = dataset.batch(list(range(count)))
            embedding = encoder.embed(contexts) if encoder is not None else None
            paths = flow.layer_paths(targets, embedding)
            names = list(dataset.metadata.get("target_names", [f"x{i}" for i in range(dataset.target_dim)]))
            paths_path = os.path.splitext(checkpoint_path)[0] + "_layers.csv"
            write_frame(layer_paths_frame(paths, names), paths_path)
            print(f"выходы слоев: {paths_path}")

        final = log.final()
        if final:
            print("итог: " + " ".join(f"{name}={final[name]:.6g}" for name in ("total", "nll", "kinetic", "prior")))
        print(f"контрольная точка {checkpoint.checkpoint_id}: {checkpoint_path}")
        print(f"журнал: {log_path}")
        return 0
