import json
import logging
import os
import threading
from typing import Any, Dict, Optional

import pandas as pd
from sqlmodel import create_engine, Session, select, SQLModel

from nlsbif.components.continuation import Branch
from nlsbif.loggers.base import Logger
from nlsbif.loggers.models import BifurcationRecord, BranchRecord, RunRecord

_logger = logging.getLogger(__name__)


def _number(value: Any) -> Optional[float]:
    try:
        value = float(value)
    except (TypeError, ValueError):
        return None
    return value if value == value else None


class DatabaseLogger(Logger):
    """Run catalogue in an SQLite file; tables and CSV payloads stay on disk next to it."""

    def __init__(self, out_dir: str, db_file_name: str = "catalogue.db") -> None:
        os.makedirs(out_dir, exist_ok=True)
        self.db_file_name = os.path.join(out_dir, db_file_name)
        self.engine = create_engine(f"sqlite:///{self.db_file_name}")
        SQLModel.metadata.create_all(self.engine)
        self._lock = threading.Lock()

    def _add(self, record: SQLModel) -> SQLModel:
        with self._lock, Session(self.engine) as session:
            session.add(record)
            session.commit()
            session.refresh(record)
            return record

    def on_run_start(self, run_id: str, scenario: str, config: Dict[str, Any]):
        self._add(RunRecord(run_id=run_id, scenario=scenario, config=json.dumps(config, sort_keys=True)))

    def on_branch(self, run_id: str, branch: Branch) -> Optional[str]:
        E = branch.E
        self._add(
            BranchRecord(
                run_id=run_id,
                label=branch.label,
                symmetry=branch.symmetry.value,
                provenance=branch.provenance.value,
                points=len(branch),
                E_min=float(E.min()),
                E_max=float(E.max()),
            )
        )
        return None

    def on_report(self, run_id: str, name: str, record: Dict[str, Any]) -> Optional[str]:
        if "E_star" in record:
            self._add(
                BifurcationRecord(
                    run_id=run_id,
                    name=name,
                    E_star=_number(record.get("E_star")),
                    lambda_prime=_number(record.get("lambda_prime")),
                    Q=_number(record.get("Q")),
                    R=_number(record.get("R")),
                    N_prime=_number(record.get("N_prime")),
                    classification=record.get("classification"),
                )
            )
        return None

    def on_table(self, run_id: str, name: str, frame: pd.DataFrame) -> Optional[str]:
        return None

    def on_run_end(self, run_id: str, manifest: Dict[str, Any]):
        with self._lock, Session(self.engine) as session:
            for run in session.exec(select(RunRecord).where(RunRecord.run_id == run_id)):
                run.status = manifest.get("status")
                run.wall_time = manifest.get("wall_time")
                session.add(run)
            session.commit()
        _logger.info(f"Catalogued run {run_id} in {self.db_file_name}")
