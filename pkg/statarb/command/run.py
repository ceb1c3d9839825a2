import logging
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from statarb.backtest.strategies import build_strategy
from statarb.backtest.walk_forward import run_walk_forward
from statarb.backtest.writer import metrics_frame
from statarb.market_data.loader import write_factor_csv, write_panel_csv
from statarb.models.config import RunConfig, StrategySpec
from statarb.models.errors import ConfigError, StrategyFailure
from statarb.models.panel import FactorReturns, ReturnsPanel, UniverseMask
from statarb.models.results import BacktestResult
from statarb.report.table import TableCreator
from statarb.service import load_market, synthetic_market
from statarb.service.results import get_manager
from statarb.utils.parallel import ordered_map

log = logging.getLogger(__name__)

TOutcome = Union[BacktestResult, StrategyFailure]


@dataclass
class RunStrategyCommand:
    """One strategy's walk-forward backtest; any exception comes back as a StrategyFailure."""
    spec: StrategySpec
    panel: ReturnsPanel = field(repr=False)
    factors: Optional[FactorReturns] = field(repr=False)
    universe: UniverseMask = field(repr=False)
    seed: int = field(default=0)
    workers: int = field(default=1)

    def execute(self) -> TOutcome:
        try:
            strategy = build_strategy(self.spec, self.factors, self.seed, self.workers)
            return run_walk_forward(strategy, self.panel, self.universe)
        except Exception as exc:
            failure = StrategyFailure(self.spec.label, exc)
            log.error('Strategy failed, %s', failure)
            log.debug('Traceback of %s', self.spec.label, exc_info=exc)
            return failure


def metrics_table(results: List[BacktestResult]) -> TableCreator:
    frame = metrics_frame(results)
    rows = [[row.model, row.variant, row.label, row.SR, row.mu, row.sigma, row.max_drawdown, row.days]
            for row in frame.itertuples(index=False)]
    return TableCreator(['model', 'variant', 'label', 'SR', 'mu', 'sigma', 'max DD', 'days'], rows)


def run_experiment(config: RunConfig) -> int:
    """Backtests every configured strategy, writes the results directory and prints the summary table."""
    try:
        panel, factors, universe = load_market(config.data)
    except (OSError, ValueError) as exc:
        log.error('Loading market data failed: %s', exc)
        print(f'Cannot load market data: {exc}', file=sys.stderr)
        return 2
    log.info('Panel with %d days and %d stocks', panel.n_days, panel.n_stocks)
    strategies = config.strategies
    # the inner autoencoder fan-out only gets the pool when strategies run one at a time
    workers = config.parallelism if len(strategies) == 1 else 1
    commands = [RunStrategyCommand(spec, panel, factors, universe, config.seed, workers) for spec in strategies]
    outcomes = ordered_map(lambda command: command.execute(), commands, config.parallelism)
    results = [outcome for outcome in outcomes if isinstance(outcome, BacktestResult)]
    failures: Dict[str, str] = {outcome.label: str(outcome.cause) for outcome in outcomes
                                if isinstance(outcome, StrategyFailure)}
    manager = get_manager(config)
    writer = manager.writer()
    writer.write(results, manager.manifest(results, failures), config.output.diagnostics,
                 config.output.export_intermediate)
    if results:
        print(metrics_table(results).render())
    for label, cause in failures.items():
        print(f'FAILED {label}: {cause}')
    print(f'Results in {manager.output_path}')
    return 1 if failures else 0


def write_synthetic(config: RunConfig) -> int:
    """Writes the configured synthetic panel and its factor returns as CSV files."""
    if config.data.source != 'synthetic' or config.data.synthetic is None:
        raise ConfigError(['synth needs data.source "synthetic"'])
    panel, _, truth = synthetic_market(config.data.synthetic)
    directory = get_manager(config).output_path
    write_panel_csv(panel, directory / 'panel.csv')
    write_factor_csv(panel.dates, truth, directory / 'factors.csv')
    print(f'Wrote {panel.n_days} days of {panel.n_stocks} stocks to {directory}')
    return 0
