import argparse
import logging
import sys
from typing import Dict, List, Optional

from src.commands.base_command import BaseCommand
from src.core.errors import ConfigError, FlowFilterError
from src.core.resource_manager import resource_manager
from src.core.run_config import load_run_config

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class CommandManager:
    """
    Управляет всеми командами командной строки.
    Разбирает аргументы, собирает конфигурацию и запускает выбранную команду.
    """

    def __init__(self, prog: str = "flowfilter"):
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")
        self.prog = prog

        # Все зарегистрированные команды
        self.commands: Dict[str, BaseCommand] = {}
        self.current_command: Optional[BaseCommand] = None

    def register_command(self, command: BaseCommand):
        """Регистрирует команду в менеджере"""
        self.commands[command.name] = command
        command.manager = self
        self.logger.debug(f"Зарегистрирована команда: {command.name}")

    @staticmethod
    def common_arguments(default=None) -> argparse.ArgumentParser:
        """
        Общие флаги корня и каждой команды. У подкоманд default=SUPPRESS,
        иначе их None затирает значение, заданное до имени команды.
        """
        common = argparse.ArgumentParser(add_help=False, argument_default=default)
        common.add_argument("--config", help="JSON-файл конфигурации (флаги важнее)")
        common.add_argument("--output-root", help="корень для datasets/, checkpoints/, reports/")
        common.add_argument("--seed", type=int, help="глобальное зерно")
        return common

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.prog, parents=[self.common_arguments()],
                                         description="Условные нормализующие потоки для оценки состояния")
        parser.add_argument("--show-config", action="store_true",
                            help="напечатать итоговую конфигурацию; без команды - и выйти")
        subparsers = parser.add_subparsers(dest="command")
        local = self.common_arguments(argparse.SUPPRESS)
        for name, command in self.commands.items():
            sub = subparsers.add_parser(name, parents=[local], help=command.help)
            command.add_arguments(sub)
        return parser

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Код выхода: 0 успех, 1 ошибка выполнения, 2 ошибка конфигурации"""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            # argparse сам печатает ошибку с именем неизвестного флага
            return EXIT_OK if not e.code else EXIT_CONFIG

        name = args.command
        if name is None:
            if not args.show_config:
                parser.print_usage(sys.stderr)
                return EXIT_CONFIG
            name = "show-config"

        self.current_command = self.commands[name]
        self.logger.info(f"Команда: {name}")
        try:
            config = load_run_config(args.config)
            config.apply_overrides("general", {"seed": args.seed})
            if args.output_root:
                resource_manager.set_output_root(args.output_root)
            elif "general.output_root" in config.sources:
                resource_manager.set_output_root(config.get("general", "output_root"))
            self.current_command.on_enter(args, config)
            if args.show_config and name != "show-config":
                print(config.as_table())
            return self.current_command.execute(args)
        except ConfigError as e:
            self.logger.error(f"Ошибка конфигурации: {e}")
            print(f"ошибка конфигурации: {e}", file=sys.stderr)
            return EXIT_CONFIG
        except FlowFilterError as e:
            self.logger.error(f"✗ {type(e).__name__}: {e}")
            print(f"{type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_FAILURE
        except Exception as e:
            self.logger.critical("Критическая ошибка: %s", e, exc_info=True)
            print(f"критическая ошибка: {e}", file=sys.stderr)
            return EXIT_FAILURE
        finally:
            self.current_command.on_exit()
            resource_manager.set_output_root(None)
