import logging
from typing import List, Optional

from config import constants as C
from src.commands import (EstimateCommand, EvaluateCommand, IngestCommand, RolloutCommand, ShowConfigCommand,
                          SimulateCommand, TrainCommand)
from src.core.command_manager import CommandManager


class CommandLine:
    """
    Точка сборки командной строки.
    (Вся логика делегируется CommandManager)
    """

    def __init__(self):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")

        # СОЗДАЕМ ЦЕНТРАЛЬНЫЙ МЕНЕДЖЕР КОМАНД
        self.manager = CommandManager(prog=C.PROJECT_NAME)

        # РЕГИСТРИРУЕМ ВСЕ КОМАНДЫ
        self._register_commands()

    def _register_commands(self):
        for command in (SimulateCommand(), IngestCommand(), TrainCommand(), EstimateCommand(),
                        RolloutCommand(), EvaluateCommand(), ShowConfigCommand()):
            self.manager.register_command(command)
        self.logger.debug(f"Команды: {', '.join(self.manager.commands)}")

    def run(self, argv: Optional[List[str]] = None) -> int:
        return self.manager.run(argv)
