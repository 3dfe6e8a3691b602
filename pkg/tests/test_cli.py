import json
import os
from unittest import mock

import pytest

from nlsbif.commands.run import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from nlsbif.utilities.exceptions import StepUnderflow

TRACE_RUN = """\
potential:
  kind: single_well_sech2
grid:
  half_width: 10
  dx: 0.05
continuation:
  E_max: 1.0
"""


@pytest.fixture
def run_file(tmp_path):
    def _write(text):
        path = tmp_path / "run.yaml"
        path.write_text(text)
        return str(path)

    return _write


def test_bad_config_exits_before_any_output(tmp_path, run_file, capsys):
    out = tmp_path / "out"
    assert main(["trace", "--config", run_file("grid:\n  dxx: 1\n"), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert "grid.dxx" in capsys.readouterr().err


def test_unknown_logger(tmp_path):
    assert main(["trace", "--loggers", "csv,wandb", "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_reproduce_figure_needs_a_figure(tmp_path):
    assert main(["reproduce_figure", "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_numerical_failure_still_writes_the_manifest(tmp_path, capsys):
    out = tmp_path / "out"
    with mock.patch("nlsbif.commands.run.execute", side_effect=StepUnderflow("step underflowed")):
        assert main(["trace", "--out", str(out)]) == EXIT_NUMERICAL
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["status"] == "numerical_failure"
    assert manifest["error"] == "step underflowed"
    assert manifest["stage"] == "setup"
    assert "setup: step underflowed" in capsys.readouterr().err


def test_trace_run_is_reproducible(tmp_path, run_file):
    config = run_file(TRACE_RUN)
    outputs = [tmp_path / "first", tmp_path / "second"]
    for out in outputs:
        assert main(["trace", "--config", config, "--out", str(out), "--loggers", "csv,database"]) == EXIT_OK

    with open(outputs[0] / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["status"] == "success"
    assert manifest["config"]["continuation"]["E_max"] == 1.0
    assert manifest["environment"]["Packages"]["nlsbif"]
    assert set(manifest["environment"]) == {"System", "Packages"}
    for name in ("even_from_E0.csv", "even_from_E0_N.svg", "even_from_E0_lambda.svg", "trace_summary.json"):
        assert name in manifest["artifacts"]
    assert os.path.exists(outputs[0] / "catalogue.db")

    for name in ("even_from_E0.csv", "even_from_E0_N.svg", "trace_summary.json"):
        with open(outputs[0] / name, "rb") as f, open(outputs[1] / name, "rb") as g:
            assert f.read() == g.read(), name
