import argparse

from src.dynamics.dataset_io import export_external_sir, ingest_external_sir, read_dataset, write_dataset
from .base_command import BaseCommand


class IngestCommand(BaseCommand):
    """Прием внешнего CSV date, S, I, R (доли популяции) в стандартный формат набора"""

    name = "ingest"
    help = "принять внешний CSV date,S,I,R"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("file", help="CSV с колонками date,S,I,R")
        parser.add_argument("--output", help="путь набора (по умолчанию datasets/<имя файла>.csv)")
        parser.add_argument("--export", help="дополнительно выгрузить принятый набор обратно в date,S,I,R")

    def execute(self, args: argparse.Namespace) -> int:
        trajectories = ingest_external_sir(args.file)
        path = self.output_path(args.output, "datasets", f"{self.stem(args.file)}.csv")
        metadata = write_dataset(trajectories, path)
        print(f"{path}: {metadata['n_records']} строк, нормализация сохранена в метаданных")
        if args.export:
            export_external_sir(read_dataset(path), args.export)
            print(f"экспорт: {args.export}")
        return 0
