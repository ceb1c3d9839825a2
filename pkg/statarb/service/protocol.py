from pathlib import Path
from typing import Any, Dict, List, Protocol

from statarb.backtest.writer import ResultsWriter
from statarb.models.results import BacktestResult


class IResultsManager(Protocol):

    @classmethod
    def manifest_name(cls) -> str:
        ...

    @property
    def output_path(self) -> Path:
        ...

    def writer(self) -> ResultsWriter:
        ...

    def manifest(self, results: List[BacktestResult], failures: Dict[str, str]) -> Dict[str, Any]:
        ...
