import argparse

from .base_command import BaseCommand


class ShowConfigCommand(BaseCommand):
    """Печать итоговой конфигурации: значение и источник (default | file | flag)"""

    name = "show-config"
    help = "показать итоговую конфигурацию"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--export", help="записать конфигурацию в JSON")

    def execute(self, args: argparse.Namespace) -> int:
        print(self.config.as_table())
        export = getattr(args, "export", None)
        if export:
            self.config.export_json(export)
            print(f"конфигурация записана: {export}")
        return 0
