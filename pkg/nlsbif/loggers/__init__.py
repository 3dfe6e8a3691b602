from enum import Enum
from typing import List

from nlsbif.loggers.base import Logger
from nlsbif.loggers.csv_logger import CSVLogger
from nlsbif.loggers.database import DatabaseLogger


class LoggerType(Enum):
    CSV = "csv"
    DATABASE = "database"

    def get_logger(self, out_dir: str) -> Logger:
        if self == LoggerType.CSV:
            return CSVLogger(out_dir)
        elif self == LoggerType.DATABASE:
            return DatabaseLogger(out_dir)
        else:
            raise ValueError("Unknown logger type")


def get_loggers(names: List[str], out_dir: str) -> List[Logger]:
    """The csv logger is always present; further names are added in order."""
    types = [LoggerType.CSV] + [LoggerType(name) for name in names if LoggerType(name) != LoggerType.CSV]
    return [t.get_logger(out_dir) for t in types]
