import copy
import json
import logging
import os
from typing import Any, Dict, Optional

from config import constants as C
from src.core.errors import ConfigError


def default_sections() -> Dict[str, Dict[str, Any]]:
    """Единая таблица значений по умолчанию, разбитая по разделам"""
    return {
        "general": {
            "seed": C.GLOBAL_SEED,
            "output_root": C.DEFAULT_OUTPUT_ROOT,
        },
        "vehicle": {
            "c1": C.VEHICLE_C1, "c2": C.VEHICLE_C2,
            "sigma_v": C.VEHICLE_SIGMA_V, "sigma_phi": C.VEHICLE_SIGMA_PHI,
            "dt": C.VEHICLE_DT, "switch_time": C.VEHICLE_SWITCH_TIME,
            "velocity": C.VEHICLE_VELOCITY,
            "steps": C.VEHICLE_STEPS, "trajectories": C.VEHICLE_TRAJECTORIES_DESK,
        },
        "sir": {
            "beta": C.SIR_BETA, "gamma": C.SIR_GAMMA,
            "noise_sigma": C.SIR_NOISE_SIGMA, "dt": C.SIR_DT,
            "S0": C.SIR_S0, "I0": C.SIR_I0, "R0": C.SIR_R0,
            "steps": C.SIR_STEPS,
            "beta_range": list(C.SIR_BETA_RANGE), "gamma_range": list(C.SIR_GAMMA_RANGE),
            "ensemble_size": C.SIR_ENSEMBLE_SIZE,
        },
        "two_moons": {
            "points": C.TWO_MOONS_POINTS, "noise": C.TWO_MOONS_NOISE,
        },
        "windows": {
            "window": C.WINDOW_LENGTH, "horizon": C.WINDOW_HORIZON, "direction": "forward",
            "context_noise_sigma": C.CONTEXT_NOISE_SIGMA, "include_params": False,
        },
        "flow": {
            "n_layers": C.FLOW_LAYERS, "hidden_features": C.FLOW_HIDDEN_FEATURES,
            "context_features": C.FLOW_CONTEXT_FEATURES, "base_hidden": C.FLOW_BASE_HIDDEN,
            "log_scale_bound": C.LOG_SCALE_BOUND,
        },
        "encoder": {
            "kind": C.ENCODER_KIND, "model_dim": C.ENCODER_MODEL_DIM, "n_heads": C.ENCODER_HEADS,
            "n_encoder_layers": C.ENCODER_LAYERS, "n_decoder_layers": C.DECODER_LAYERS,
            "ff_dim": C.ENCODER_FF_DIM, "ssm_state_dim": C.SSM_STATE_DIM,
            "conv_kernel_width": C.SSM_CONV_WIDTH, "expansion": C.SSM_EXPANSION,
            "ssm_depth": C.SSM_DEPTH, "mlp_hidden": C.MLP_HIDDEN,
        },
        "train": {
            "iterations": C.TRAIN_ITERATIONS, "batch_size": C.TRAIN_BATCH_SIZE,
            "learning_rate": C.LEARNING_RATE, "beta1": C.ADAM_BETA1, "beta2": C.ADAM_BETA2,
            "eps": C.ADAM_EPS, "clip_norm": C.GRAD_CLIP_NORM,
            "lambda1": C.LAMBDA_NLL, "lambda2": C.LAMBDA_KINETIC, "lambda3": C.LAMBDA_PRIOR,
            "log_every": C.LOG_EVERY, "record_wallclock": True,
        },
        "estimate": {
            "samples": C.ESTIMATE_SAMPLES, "k": C.KNN_K, "contour_points": C.CONTOUR_POINTS,
        },
        "rollout": {
            "steps": C.ROLLOUT_STEPS, "window_days": None, "aggregation": "mean",
            "band_sigma": C.BAND_SIGMA,
        },
    }


class RunConfig:
    """
    Центр всех параметров запуска.
    Порядок: значения по умолчанию -> файл конфигурации -> флаги командной строки.
    Неизвестные разделы и ключи отвергаются.
    """

    def __init__(self):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.sections = default_sections()
        self.sources: Dict[str, str] = {}

    def get(self, section: str, key: str) -> Any:
        self._check(section, [key])
        return self.sections[section][key]

    def section(self, name: str) -> Dict[str, Any]:
        self._check(name, [])
        return dict(self.sections[name])

    def _check(self, section: str, keys):
        if section not in self.sections:
            raise ConfigError("неизвестный раздел конфигурации", fields=[section])
        unknown = sorted(k for k in keys if k not in self.sections[section])
        if unknown:
            raise ConfigError(f"неизвестные ключи в разделе '{section}'",
                              fields=[f"{section}.{k}" for k in unknown])

    def _assign(self, section: str, key: str, value: Any, source: str):
        current = self.sections[section][key]
        if isinstance(current, bool) and not isinstance(value, bool):
            raise ConfigError("ожидается логическое значение", fields=[f"{section}.{key}"])
        if isinstance(current, (int, float)) and not isinstance(current, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError("ожидается число", fields=[f"{section}.{key}"])
            if isinstance(current, int) and not isinstance(value, int) and float(value).is_integer():
                value = int(value)
        if isinstance(current, list) and not isinstance(value, (list, tuple)):
            raise ConfigError("ожидается список", fields=[f"{section}.{key}"])
        self.sections[section][key] = list(value) if isinstance(value, tuple) else value
        self.sources[f"{section}.{key}"] = source

    # работа с JSON
    def load_file(self, path: str) -> "RunConfig":
        """Загружает JSON вида {"раздел": {"ключ": значение}}"""
        self.logger.debug(f"Загрузка конфигурации из {path}")
        if not os.path.exists(path):
            raise ConfigError(f"файл конфигурации не найден: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"ошибка чтения {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: корень должен быть объектом")

        unknown_sections = sorted(set(data) - set(self.sections))
        if unknown_sections:
            raise ConfigError("неизвестные разделы конфигурации", fields=unknown_sections)
        for section, values in data.items():
            if not isinstance(values, dict):
                raise ConfigError("раздел должен быть объектом", fields=[section])
            self._check(section, values)
            for key, value in values.items():
                self._assign(section, key, value, f"file:{os.path.basename(path)}")
        self.logger.info(f"✓ Конфигурация загружена из {path}")
        return self

    def apply_overrides(self, section: str, overrides: Dict[str, Any]) -> "RunConfig":
        """Флаги командной строки; None означает 'не задан'"""
        given = {k: v for k, v in overrides.items() if v is not None}
        self._check(section, given)
        for key, value in given.items():
            self._assign(section, key, value, "flag")
        return self

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.sections)

    def export_json(self, path: str):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")

    def as_table(self) -> str:
        lines = []
        for section in self.sections:
            for key, value in self.sections[section].items():
                source = self.sources.get(f"{section}.{key}", "default")
                lines.append(f"{section + '.' + key:<32} {value!s:<24} [{source}]")
        return "\n".join(lines)

    # Параметры модулей
    def vehicle_params(self):
        from src.dynamics.vehicle import VehicleParams  # Ленивый импорт
        v = self.sections["vehicle"]
        return VehicleParams(c1=v["c1"], c2=v["c2"], sigma_v=v["sigma_v"], sigma_phi=v["sigma_phi"],
                             dt=v["dt"], switch_time=v["switch_time"])

    def sir_params(self):
        from src.dynamics.sir import SirParams
        s = self.sections["sir"]
        return SirParams(beta=s["beta"], gamma=s["gamma"], noise_sigma=s["noise_sigma"], dt=s["dt"])

    def sir_initial(self):
        from src.dynamics.sir import SirState
        s = self.sections["sir"]
        return SirState(S=s["S0"], I=s["I0"], R=s["R0"])

    def flow_overrides(self) -> Dict[str, Any]:
        return dict(self.sections["flow"], seed=self.sections["general"]["seed"])

    def encoder_overrides(self) -> Dict[str, Any]:
        return dict(self.sections["encoder"], seed=self.sections["general"]["seed"])

    def train_config(self):
        from src.training import LossWeights, TrainConfig
        t = dict(self.sections["train"])
        weights = LossWeights(t.pop("lambda1"), t.pop("lambda2"), t.pop("lambda3"))
        return TrainConfig(weights=weights, seed=self.sections["general"]["seed"], **t)

    def rollout_config(self, direction: str, window: int, horizon: int):
        from src.inference import RolloutConfig
        r = self.sections["rollout"]
        return RolloutConfig(direction=direction, window=window, horizon=horizon, n_steps=r["steps"],
                             aggregation=r["aggregation"], n_samples=self.sections["estimate"]["samples"],
                             window_size_days=r["window_days"])


def load_run_config(path: Optional[str] = None) -> RunConfig:
    config = RunConfig()
    if path:
        config.load_file(path)
    return config
