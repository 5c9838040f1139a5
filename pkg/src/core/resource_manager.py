import logging
import os
from pathlib import Path
from typing import Dict, Optional

from config import constants as C

SUBDIRS = {"datasets": "datasets", "checkpoints": "checkpoints", "reports": "reports"}


class ResourceManager:
    """Менеджер путей вывода и кэша загруженных наборов и контрольных точек"""

    def __init__(self):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self._datasets: Dict[str, object] = {}
        self._checkpoints: Dict[str, object] = {}
        self._project_root = None
        self._output_root: Optional[str] = None

    def get_project_root(self) -> str:
        """Ленивая загрузка корня проекта"""
        if self._project_root is None:
            current_file = Path(__file__).resolve()
            core_dir = current_file.parent
            src_dir = core_dir.parent
            self._project_root = str(src_dir.parent)
        return os.path.normpath(self._project_root)

    def set_output_root(self, path: Optional[str]):
        """Явный корень вывода (флаг --output-root) важнее переменной окружения"""
        self._output_root = path

    def get_output_root(self) -> str:
        if self._output_root:
            return os.path.normpath(self._output_root)
        return os.path.normpath(os.environ.get(C.OUTPUT_ROOT_ENV, C.DEFAULT_OUTPUT_ROOT))

    def get_output_path(self, kind: str, name: str) -> str:
        """Путь вида <корень>/<datasets|checkpoints|reports>/name"""
        if kind not in SUBDIRS:
            raise KeyError(f"неизвестный вид вывода: {kind}")
        return os.path.join(self.get_output_root(), SUBDIRS[kind], name)

    def resolve(self, path: str, kind: str) -> str:
        """Абсолютные и существующие пути - как есть, иначе относительно корня вывода"""
        if os.path.isabs(path) or os.path.exists(path):
            return path
        return self.get_output_path(kind, path)

    def load_dataset(self, path: str):
        """Загрузить набор с кэшированием"""
        if path in self._datasets:
            return self._datasets[path]
        from src.dynamics.dataset_io import read_dataset  # Ленивый импорт
        dataset = read_dataset(path)
        self._datasets[path] = dataset
        self.logger.debug(f"Набор в кэше: {path}")
        return dataset

    def load_checkpoint(self, path: str):
        """Загрузить контрольную точку с кэшированием"""
        if path in self._checkpoints:
            return self._checkpoints[path]
        from src.flow.checkpoint import Checkpoint
        checkpoint = Checkpoint.load(path)
        self._checkpoints[path] = checkpoint
        self.logger.debug(f"Контрольная точка в кэше: {path}")
        return checkpoint

    def clear_cache(self):
        """Очистить кэш"""
        self._datasets.clear()
        self._checkpoints.clear()


# Глобальный экземпляр менеджера
resource_manager = ResourceManager()
