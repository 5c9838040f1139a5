import argparse
import logging
import os
from typing import Optional

from src.core.resource_manager import resource_manager
from src.core.run_config import RunConfig


class BaseCommand:
    """
    Базовый класс для всех команд.
    Жизненный цикл: on_enter -> configure -> execute -> on_exit.
    """

    name = ""
    help = ""

    def __init__(self):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.rm = resource_manager
        self.config: Optional[RunConfig] = None
        self.manager = None

    def add_arguments(self, parser: argparse.ArgumentParser):
        """Флаги команды"""
        pass

    def on_enter(self, args: argparse.Namespace, config: RunConfig):
        """Вход в команду"""
        self.config = config
        self.configure(args)

    def configure(self, args: argparse.Namespace):
        """Перенос флагов в конфигурацию"""
        pass

    def execute(self, args: argparse.Namespace) -> int:
        raise NotImplementedError

    def on_exit(self):
        """Выход из команды"""
        pass

    @property
    def seed(self) -> int:
        return self.config.get("general", "seed")

    def output_path(self, given: Optional[str], kind: str, default_name: str) -> str:
        if given:
            return given
        return self.rm.get_output_path(kind, default_name)

    def input_path(self, given: str, kind: str) -> str:
        return self.rm.resolve(given, kind)

    @staticmethod
    def stem(path: str) -> str:
        return os.path.splitext(os.path.basename(path))[0]
