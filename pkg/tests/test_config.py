import pytest

from nlsbif.commands.config import load_config, parse_config, RunConfig
from nlsbif.components.continuation import ContinuationControls
from nlsbif.operators.schrodinger import Normalization
from nlsbif.potentials.potentials import DoubleWellSech2, SingleWellSech2
from nlsbif.utilities.exceptions import ConfigError

RUN_FILE = """\
run:
  scenario: pitchfork
  workers: 2
potential:
  kind: double_well_sech2
  s: 0.7
problem:
  p: 1
  normalization: section5
grid:
  dx: 0.025
continuation:
  E_max: 12
"""


def test_defaults():
    config = RunConfig()
    assert config.run.workers == 1
    assert config.run.loggers == []
    assert isinstance(config.potential_object(), SingleWellSech2)
    assert config.grid.build().dx == pytest.approx(0.0125)
    assert config.params().stencil_order == 4
    assert isinstance(config.continuation.build(), ContinuationControls)
    assert config.bifurcation.build().a0_sweep == (0.25, 0.5, 1.0)
    assert list(config.scaling.distribution().values())[0] == pytest.approx(50.0)


def test_parse_a_run_file():
    config = parse_config(RUN_FILE)
    assert config.run.scenario == "pitchfork"
    potential = config.potential_object()
    assert isinstance(potential, DoubleWellSech2) and potential.s == 0.7
    assert config.params().normalization == Normalization.SECTION5
    assert config.grid.build().n == 2001
    assert config.continuation.E_max == 12.0


def test_load_config_from_disk(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(RUN_FILE)
    assert load_config(str(path)).run.workers == 2
    assert load_config(None) == RunConfig()
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))


def test_unknown_key_names_the_key_and_line():
    with pytest.raises(ConfigError) as err:
        parse_config("grid:\n  half_width: 10\n  dxx: 0.1\n")
    assert err.value.key == "grid.dxx"
    assert err.value.line == 3


@pytest.mark.parametrize(
    "text, key",
    [
        ("grid:\n  dx: 0\n", "grid.dx"),
        ("grid:\n  n: 100\n", "grid"),
        ("problem:\n  sigma: 0\n", "problem.sigma"),
        ("continuation:\n  dE_min: 1.0\n  dE_max: 0.1\n", "continuation"),
        ("potential:\n  kind: double_well_sech2\n", "potential"),
        ("run:\n  scenario: nonsense\n", "run.scenario"),
    ],
)
def test_invalid_values(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert err.value.line is not None


def test_malformed_yaml_reports_the_line():
    with pytest.raises(ConfigError) as err:
        parse_config("grid:\n  dx: [0.1\n")
    assert err.value.line is not None


def test_a_run_file_must_be_a_mapping():
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")
    assert parse_config("") == RunConfig()


def test_bad_distribution():
    with pytest.raises(ConfigError) as err:
        parse_config("scaling:\n  E:\n    distribution: log_uniform_grid\n    params: {low: 5, high: 1, num: 3}\n")
    assert err.value.key == "scaling.E"
    assert err.value.line == 2


def test_updated_revalidates():
    config = RunConfig().updated(run={"workers": 4}, grid={"dx": 0.05})
    assert config.run.workers == 4
    assert config.grid.build().dx == pytest.approx(0.05)
    with pytest.raises(ConfigError):
        RunConfig().updated(run={"workers": 0})
