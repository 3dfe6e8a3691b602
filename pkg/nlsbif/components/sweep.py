import logging
import uuid
from concurrent.futures import as_completed, ThreadPoolExecutor
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, TypeVar

from nlsbif.utilities.exceptions import NlsBifError

_logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class Sweep(Generic[T, R]):
    def __init__(self, simultaneous_tasks: int = 1, sweep_id: Optional[str] = None, name: str = "sweep") -> None:
        """Runs independent tasks on a thread pool and collects their results in submission order.

        Arguments:
            simultaneous_tasks: Number of tasks running at the same time.
            sweep_id: Identifier used in log messages; a short random id by default.
            name: Human readable name of the stage the tasks belong to.
        """
        if simultaneous_tasks < 1:
            raise ValueError(f"simultaneous_tasks must be at least 1, got {simultaneous_tasks}.")
        self.simultaneous_tasks = simultaneous_tasks
        self.sweep_id = sweep_id or str(uuid.uuid4()).split("-")[0]
        self.name = name
        self.errors: Dict[int, NlsBifError] = {}
        self.has_failed = False

    def run(self, task: Callable[[T], R], items: Sequence[T], raise_exception: bool = True) -> List[Optional[R]]:
        results: List[Optional[R]] = [None] * len(items)
        if self.simultaneous_tasks == 1 or len(items) <= 1:
            for task_id, item in enumerate(items):
                results[task_id] = self._run_one(task, task_id, item, raise_exception)
            return results
        with ThreadPoolExecutor(max_workers=self.simultaneous_tasks) as executor:
            futures = {
                executor.submit(self._run_one, task, task_id, item, raise_exception): task_id
                for task_id, item in enumerate(items)
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()
        return results

    def _run_one(self, task: Callable[[T], R], task_id: int, item: T, raise_exception: bool) -> Optional[R]:
        _logger.debug(f"{self.name} {self.sweep_id}: task {task_id} started with {item}")
        try:
            result = task(item)
        except NlsBifError as err:
            self.has_failed = True
            self.errors[task_id] = err
            _logger.warning(f"{self.name} {self.sweep_id}: task {task_id} failed: {err}")
            if raise_exception:
                raise
            return None
        _logger.debug(f"{self.name} {self.sweep_id}: task {task_id} finished")
        return result


def run_concurrently(tasks: Dict[str, Callable[[], Any]], simultaneous_tasks: int = 1) -> Dict[str, Any]:
    """Named zero-argument stages through a Sweep; results are keyed by stage name."""
    names = list(tasks)
    sweep: Sweep[str, Any] = Sweep(simultaneous_tasks=simultaneous_tasks, name="stages")
    return dict(zip(names, sweep.run(lambda name: tasks[name](), names)))
