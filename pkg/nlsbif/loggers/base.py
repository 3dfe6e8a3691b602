from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import pandas as pd

from nlsbif.components.continuation import Branch


class Logger(ABC):
    """Receives every artifact a scenario produces."""

    def on_run_start(self, run_id: str, scenario: str, config: Dict[str, Any]):
        ...

    @abstractmethod
    def on_branch(self, run_id: str, branch: Branch) -> Optional[str]:
        ...

    @abstractmethod
    def on_report(self, run_id: str, name: str, record: Dict[str, Any]) -> Optional[str]:
        ...

    @abstractmethod
    def on_table(self, run_id: str, name: str, frame: pd.DataFrame) -> Optional[str]:
        ...

    def on_run_end(self, run_id: str, manifest: Dict[str, Any]):
        ...
