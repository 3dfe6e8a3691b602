import threading
import time

import pytest

from nlsbif.components.sweep import run_concurrently, Sweep
from nlsbif.utilities.exceptions import MaxIterExceeded


@pytest.mark.parametrize("workers", [1, 3])
def test_results_keep_submission_order(workers):
    def _task(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    assert Sweep(simultaneous_tasks=workers).run(_task, [1, 2, 3, 4]) == [1, 4, 9, 16]


def test_tasks_run_at_the_same_time():
    barrier = threading.Barrier(2, timeout=5)
    assert Sweep(simultaneous_tasks=2).run(lambda x: barrier.wait() is not None and x, [1, 2]) == [1, 2]


def test_failures_are_recorded():
    def _task(x):
        if x == 2:
            raise MaxIterExceeded("no convergence")
        return x

    sweep = Sweep(simultaneous_tasks=2)
    assert sweep.run(_task, [1, 2, 3], raise_exception=False) == [1, None, 3]
    assert sweep.has_failed
    assert list(sweep.errors) == [1]
    with pytest.raises(MaxIterExceeded):
        Sweep().run(_task, [1, 2, 3])


def test_run_concurrently_keys_results_by_name():
    assert run_concurrently({"a": lambda: 1, "b": lambda: 2}, simultaneous_tasks=2) == {"a": 1, "b": 2}


def test_rejects_zero_workers():
    with pytest.raises(ValueError):
        Sweep(simultaneous_tasks=0)
