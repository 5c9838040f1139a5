import logging
import os
import sys
from logging.handlers import RotatingFileHandler

import numpy as np

from config import constants as C
from frame.command_line import CommandLine


class BackupRotatingHandler(RotatingFileHandler):
    """
    Ротация с именами flowfilter.log.backup1, .backup2, ...
    Новый backup получает следующий свободный номер, старые сверх backupCount удаляются.
    """

    def doRollover(self):
        if self.stream:
            self.stream.close()
            self.stream = None

        number = 1
        while os.path.exists(f"{self.baseFilename}.backup{number}"):
            number += 1
        os.rename(self.baseFilename, f"{self.baseFilename}.backup{number}")

        if self.backupCount > 0:
            for old in range(number - self.backupCount, 0, -1):
                stale = f"{self.baseFilename}.backup{old}"
                if os.path.exists(stale):
                    os.remove(stale)
        if not self.delay:
            self.stream = self._open()


def setup_logging(log_dir: str = C.LOG_DIR, console_level: int = logging.INFO):
    """Файл логов с ротацией + консоль; корневой логгер на DEBUG"""
    os.makedirs(log_dir, exist_ok=True)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                                  datefmt='%Y-%m-%d %H:%M:%S')
    file_handler = BackupRotatingHandler(filename=os.path.join(log_dir, C.LOG_FILE),
                                         maxBytes=C.LOG_MAX_BYTES, backupCount=C.LOG_BACKUPS,
                                         encoding='utf-8')
    file_handler.setFormatter(formatter)

    # консоль - stderr: stdout занят результатами команд
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(console_level)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    root_logger.handlers.clear()
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    # Отключение логов сторонних библиотек
    for lib in ("matplotlib", "numexpr"):
        logging.getLogger(lib).setLevel(logging.WARNING)

    return file_handler


def main(argv=None) -> int:
    logger = logging.getLogger(__name__)
    logger.info("Начало сессии...")
    logger.debug("Параметры запуска: %s", sys.argv[1:] if argv is None else argv)
    logger.debug(f"numpy {np.__version__}")

    try:
        return CommandLine().run(argv)
    except Exception as e:
        logger.critical("Критическая ошибка: %s", e, exc_info=True)
        return 1
    finally:
        logger.info("Конец сессии...\n")


if __name__ == "__main__":
    level = logging.getLevelName(os.environ.get(C.LOG_LEVEL_ENV, "INFO").upper())
    setup_logging(console_level=level if isinstance(level, int) else logging.INFO)
    sys.exit(main())
