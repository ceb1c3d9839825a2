from pathlib import Path
from typing import Any, Dict, List

from statarb.backtest.strategies import strategy_seed
from statarb.backtest.writer import ResultsWriter
from statarb.models.config import RunConfig
from statarb.models.results import BacktestResult
from statarb.service.protocol import IResultsManager
from statarb.utils.paths import file_sha256, output_directory

MANIFEST_VERSION = 1


class ResultsManager(IResultsManager):

    @classmethod
    def manifest_name(cls) -> str:
        return 'manifest.json'

    def __init__(self, config: RunConfig) -> None:
        super().__init__()
        self.config = config

    @property
    def output_path(self) -> Path:
        return output_directory(self.config.output.directory)

    def writer(self) -> ResultsWriter:
        return ResultsWriter(self.output_path)

    def _inputs(self) -> Dict[str, str]:
        hashes = {}
        for path in (self.config.data.path, self.config.data.factors):
            if path is not None and path.is_file():
                hashes[path.name] = file_sha256(path)
        return hashes

    def manifest(self, results: List[BacktestResult], failures: Dict[str, str]) -> Dict[str, Any]:
        """Everything needed to repeat the run: the configuration as read, derived seeds and input hashes."""
        return {
            'version': MANIFEST_VERSION,
            'config': self.config.content,
            'seed': self.config.seed,
            'strategy_seeds': {spec.label: strategy_seed(spec, self.config.seed) for spec in self.config.strategies},
            'inputs': self._inputs(),
            'completed': sorted(result.label for result in results),
            'failed': failures,
        }


def get_manager(config: RunConfig) -> IResultsManager:
    return ResultsManager(config)
