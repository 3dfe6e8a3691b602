import os
from concurrent.futures import ThreadPoolExecutor
from unittest import mock

import pytest

from nlsbif.commands.config import RunConfig
from nlsbif.commands.scenarios import resolution_audit, RunContext
from nlsbif.utilities.exceptions import InvalidParameters
from tests.conftest import synthetic_branch

SINGLE_WELL = {
    "potential": {"kind": "single_well_sech2"},
    "grid": {"half_width": 10.0, "dx": 0.05},
    "continuation": {"E_max": 1.0},
}


@pytest.fixture
def ctx(tmp_path):
    return RunContext(str(tmp_path / "out"), loggers=[])


def test_audit_at_the_same_resolution_agrees_with_itself(ctx):
    record = resolution_audit(RunConfig.model_validate(SINGLE_WELL), ctx, refinement=1)
    assert record["dx_coarse"] == record["dx_fine"]
    assert record["max_lambda_difference"] == 0.0
    assert record["crossing_count_differs"] is False
    assert record["crossings_coarse"] == record["crossings_fine"] == []
    assert os.path.join(ctx.out_dir, "resolution_audit.svg") in ctx.artifacts


def test_audit_flags_a_crossing_that_vanishes_on_refinement(ctx, coarse_grid):
    config = RunConfig.model_validate(SINGLE_WELL)
    coarse_dx = config.grid.build().dx

    def _trace(config, ctx, grid=None, mode=None, prefix=""):
        if grid.dx == coarse_dx:
            return synthetic_branch([1.0, 2.0, 3.0], [0.3, -0.1, 0.2], coarse_grid, label=f"{prefix}branch")
        return synthetic_branch([1.0, 2.0, 3.0], [0.3, 0.2, 0.1], coarse_grid, label=f"{prefix}branch")

    with mock.patch("nlsbif.commands.scenarios.trace_linear_branch", side_effect=_trace):
        record = resolution_audit(config, ctx, prefix="check_")
    assert record["refinement"] == 2
    assert len(record["crossings_coarse"]) == 2
    assert record["crossings_fine"] == []
    assert record["crossing_count_differs"] is True
    assert record["max_lambda_difference"] == pytest.approx(0.3)


def test_audit_refinement_must_be_positive(ctx):
    with pytest.raises(InvalidParameters):
        resolution_audit(RunConfig.model_validate(SINGLE_WELL), ctx, refinement=0)


def test_artifacts_recorded_from_many_threads_are_unique(ctx):
    paths = [os.path.join(ctx.out_dir, f"table_{i % 5}.csv") for i in range(400)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(ctx._record, paths))
    assert sorted(ctx.artifacts) == sorted(set(paths))
    assert len(ctx.artifacts) == 5
