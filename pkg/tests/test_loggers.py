import json
import os

import numpy as np
import pandas as pd
import pytest
from sqlmodel import select, Session

from nlsbif.loggers import CSVLogger, DatabaseLogger, get_loggers, LoggerType
from nlsbif.loggers.models import BifurcationRecord, BranchRecord, RunRecord
from tests.conftest import synthetic_branch


@pytest.fixture
def branch(coarse_grid):
    return synthetic_branch([1.0, 2.0, 3.0], [0.3, 0.2, 0.1], coarse_grid, label="even_from_E0")


def test_get_loggers_always_includes_csv(tmp_path):
    loggers = get_loggers([], str(tmp_path))
    assert [type(logger) for logger in loggers] == [CSVLogger]
    loggers = get_loggers(["database", "csv"], str(tmp_path))
    assert [type(logger) for logger in loggers] == [CSVLogger, DatabaseLogger]
    with pytest.raises(ValueError):
        LoggerType("wandb")


def test_csv_logger_writes_branch_and_metadata(tmp_path, branch):
    logger = CSVLogger(str(tmp_path))
    path = logger.on_branch("run", branch)
    assert path == os.path.join(str(tmp_path), "even_from_E0.csv")
    frame = pd.read_csv(path)
    assert list(frame["E"]) == [1.0, 2.0, 3.0]
    np.testing.assert_allclose(frame["lambda1"], [0.3, 0.2, 0.1])
    with open(tmp_path / "even_from_E0.meta.json") as f:
        meta = json.load(f)
    assert meta["symmetry"] == "even"
    assert meta["points"] == 3


def test_json_records_map_nan_to_null(tmp_path):
    logger = CSVLogger(str(tmp_path))
    path = logger.on_report("run", "bifurcation", {"E_star": np.float64(1.5), "Q": float("nan"), "sweep": (1, 2)})
    with open(path) as f:
        record = json.load(f)
    assert record == {"E_star": 1.5, "Q": None, "sweep": [1, 2]}


def test_database_logger_catalogues_a_run(tmp_path, branch):
    logger = DatabaseLogger(str(tmp_path))
    logger.on_run_start("abc", "pitchfork", {"run": {"workers": 1}})
    assert logger.on_branch("abc", branch) is None
    logger.on_report("abc", "bifurcation", {"E_star": 10.7, "Q": float("nan"), "classification": "supercritical"})
    logger.on_report("abc", "trace_summary", {"points": 3})
    logger.on_run_end("abc", {"status": "success", "wall_time": 1.25})
    with Session(logger.engine) as session:
        run = session.exec(select(RunRecord)).one()
        assert (run.scenario, run.status, run.wall_time) == ("pitchfork", "success", 1.25)
        record = session.exec(select(BranchRecord)).one()
        assert (record.label, record.points, record.E_max) == ("even_from_E0", 3, 3.0)
        bifurcation = session.exec(select(BifurcationRecord)).one()
        assert bifurcation.E_star == 10.7
        assert bifurcation.Q is None
