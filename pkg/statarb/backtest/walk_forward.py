import logging
from typing import Optional

import numpy as np
import pandas as pd

from statarb.backtest.metrics import performance_metrics
from statarb.backtest.weights import normalize_weights, portfolio_returns
from statarb.models.errors import WarmupShortfallError
from statarb.models.model import IStrategy
from statarb.models.panel import ReturnsPanel, UniverseMask
from statarb.models.results import BacktestResult

log = logging.getLogger(__name__)

# a backtest needs at least this many realized days after the warm-up
MIN_REALIZED = 2


def _bound(dates: pd.DatetimeIndex, value: Optional[str], default: int, side: str) -> int:
    if value is None:
        return default
    return int(dates.searchsorted(pd.Timestamp(value), side=side)) - (1 if side == 'right' else 0)


def decision_rows(strategy: IStrategy, panel: ReturnsPanel) -> range:
    """Decision rows from the end of the warm-up to the day before the last panel date."""
    warmup = strategy.warmup
    if panel.n_days < warmup + MIN_REALIZED + 1:
        raise WarmupShortfallError(strategy.spec.label, warmup + MIN_REALIZED + 1, panel.n_days)
    first = max(warmup, _bound(panel.dates, strategy.spec.start, warmup, 'left'))
    last = min(panel.n_days - 2, _bound(panel.dates, strategy.spec.end, panel.n_days - 2, 'right'))
    return range(first, last + 1)


def run_walk_forward(strategy: IStrategy, panel: ReturnsPanel,
                     universe: Optional[UniverseMask] = None) -> BacktestResult:
    """Weights decided at row t from data up to t, realized on row t + 1."""
    universe = UniverseMask.everyone(panel) if universe is None else universe
    spec = strategy.spec
    rows = decision_rows(strategy, panel)
    log.info('%s: %d decision days from %s', spec.label, len(rows),
             panel.dates[rows.start].date() if len(rows) else '-')
    produced = strategy.signals(panel, universe, rows)
    index = np.arange(rows.start, rows.stop)
    weights = normalize_weights(produced.phi[index])
    returns = portfolio_returns(weights, panel.returns[index + 1])
    traded = np.abs(weights).sum(axis=1) > 0
    if not traded.all():
        log.info('%s: %d of %d days without positions', spec.label, int((~traded).sum()), len(traded))
    performance = performance_metrics(returns)
    return BacktestResult(spec.label, spec.model, spec.variant_name, panel.tickers, panel.dates[index],
                          panel.dates[index + 1], weights, returns, traded, performance,
                          produced.residuals, produced.signals, produced.diagnostics, produced.networks)
