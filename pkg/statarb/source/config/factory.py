import logging
from pathlib import Path
from typing import Any, List

from statarb.models.config import DataConfig, OutputConfig, RunConfig
from statarb.models.errors import ConfigError
from statarb.source.config.builder import (DataConfigBuilder,
                                           OutputConfigBuilder,
                                           StrategySpecBuilder)
from statarb.source.config.repository import JsonConfigRepository
from statarb.source.gateway import IConfigFactory

log = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ('data', 'strategies', 'output', 'seed', 'parallelism')


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class JsonConfigFactory(IConfigFactory):
    def __init__(self, data: DataConfigBuilder, strategy: StrategySpecBuilder,
                 output: OutputConfigBuilder, json_repo: JsonConfigRepository) -> None:
        self.data_builder = data
        self.strategy_builder = strategy
        self.output_builder = output
        self.json_repo = json_repo

    def can_create(self, path: Path) -> bool:
        try:
            return self.json_repo.can_read(path)
        except FileNotFoundError:
            return False

    def _top_level(self, violations: List[str]) -> None:
        for key in self.json_repo.content:
            if key not in TOP_LEVEL_KEYS:
                violations.append(f'unknown key "{key}"')
        for key in ('data', 'strategies'):
            if key not in self.json_repo.content:
                violations.append(f'missing required key "{key}"')
        seed = self.json_repo.get_value('seed', 0)
        if not _is_int(seed) or seed < 0:
            violations.append(f'seed must be a non-negative integer, got {seed!r}')
        parallelism = self.json_repo.get_value('parallelism', 1)
        if not _is_int(parallelism) or parallelism < 1:
            violations.append(f'parallelism must be an integer >= 1, got {parallelism!r}')

    def run_config(self, path: Path) -> RunConfig:
        """Validated run configuration; raises ConfigError listing every violation found."""
        if not self.can_create(path):
            raise ConfigError([f'configuration [{path}] can not be read as a JSON object'])
        try:
            self.json_repo.read(path)
        except ValueError as exc:
            raise ConfigError([f'configuration [{path}] is not valid JSON: {exc}']) from exc
        folder = self.json_repo.folder
        violations: List[str] = []
        self._top_level(violations)
        data = self.data_builder.build(self.json_repo.section('data'), folder=folder)
        violations.extend(self.data_builder.violations)
        strategies = []
        content = self.json_repo.strategies()
        if not isinstance(content, list) or len(content) == 0:
            violations.append('strategies must be a non-empty list')
            content = []
        for index, strategy_content in enumerate(content):
            spec = self.strategy_builder.build(strategy_content, index=index, folder=folder)
            violations.extend(self.strategy_builder.violations)
            if spec is not None:
                strategies.append(spec)
        labels = [spec.label for spec in strategies]
        for label in sorted({label for label in labels if labels.count(label) > 1}):
            violations.append(f'strategy label "{label}" is used more than once')
        output = self.output_builder.build(self.json_repo.section('output'), folder=folder)
        violations.extend(self.output_builder.violations)
        if violations:
            raise ConfigError(violations)
        log.info('Read configuration %s: %d strategies', path.name, len(strategies))
        return RunConfig(data or DataConfig(), strategies, output or OutputConfig(),
                         self.json_repo.get_value('seed', 0), self.json_repo.get_value('parallelism', 1),
                         dict(self.json_repo.content), path)
