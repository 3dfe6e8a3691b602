import json
import logging
import os
import threading
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from nlsbif.components.continuation import Branch
from nlsbif.loggers.base import Logger

_logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(path: str, record: Dict[str, Any]) -> str:
    with open(path, "w") as f:
        json.dump(_jsonable(record), f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def write_csv(path: str, frame: pd.DataFrame) -> str:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


class CSVLogger(Logger):
    """Branch and table CSVs plus JSON records under the output directory."""

    def __init__(self, out_dir: str) -> None:
        self.out_dir = out_dir
        self._lock = threading.Lock()
        os.makedirs(out_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def on_branch(self, run_id: str, branch: Branch) -> Optional[str]:
        path = self._path(f"{branch.label}.csv")
        with self._lock:
            write_csv(path, branch.to_frame())
            write_json(self._path(f"{branch.label}.meta.json"), branch.metadata())
        _logger.info(f"Wrote {len(branch)} points of {branch.label} to {path}")
        return path

    def on_report(self, run_id: str, name: str, record: Dict[str, Any]) -> Optional[str]:
        with self._lock:
            return write_json(self._path(f"{name}.json"), record)

    def on_table(self, run_id: str, name: str, frame: pd.DataFrame) -> Optional[str]:
        with self._lock:
            return write_csv(self._path(f"{name}.csv"), frame)

    def on_run_end(self, run_id: str, manifest: Dict[str, Any]):
        with self._lock:
            write_json(self._path("manifest.json"), manifest)
