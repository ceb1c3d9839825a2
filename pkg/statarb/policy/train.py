import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from statarb.market_data.standardize import standardize_window
from statarb.models.config import PolicyConfig
from statarb.models.errors import (DegenerateSeriesError,
                                   InsufficientStocksError)
from statarb.models.panel import ReturnsPanel, TDate, UniverseMask
from statarb.nn.adam import AdamState, adam_update
from statarb.policy.network import (PolicyNet, build_policy_net,
                                    policy_forward, policy_loss)
from statarb.utils.parallel import ordered_map
from statarb.utils.seeds import derive_seed

log = logging.getLogger(__name__)


def train_policy(net: PolicyNet, z: np.ndarray, next_returns: np.ndarray,
                 config: PolicyConfig) -> List[Dict[str, Any]]:
    """Full-window Adam epochs on the geared loss; one diagnostics entry per epoch."""
    state = AdamState.for_parameters(net.parameters, config.lr)
    net.autoencoder.train()
    diagnostics = []
    for epoch in range(config.epochs):
        result = policy_loss(net, z, next_returns, config.gearing)
        adam_update(net.parameters, result.grads, state)
        net.touch()
        diagnostics.append({'epoch': epoch, 'loss': result.loss, 'mse': result.mse,
                            'sharpe': None if np.isnan(result.sharpe) else result.sharpe,
                            'degenerate': result.degenerate})
    net.autoencoder.eval()
    return diagnostics


@dataclass
class PolicyDay:
    row: int
    columns: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    zero_signal: bool = field(default=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, repr=False)
    net: Optional[PolicyNet] = field(default=None, repr=False)


def day_seed(config: PolicyConfig, row: int) -> int:
    return derive_seed(config.seed, 'policy', config.latent_dim, row)


def _window(panel: ReturnsPanel, t: TDate, config: PolicyConfig, columns: Optional[np.ndarray]):
    standardized = standardize_window(panel, t, config.window, config.cap, columns, drop_degenerate=True)
    if len(standardized.columns) <= config.latent_dim:
        raise InsufficientStocksError(f'{len(standardized.columns)} stocks for latent dimension {config.latent_dim}')
    return standardized


def train_policy_day(panel: ReturnsPanel, t: TDate, config: PolicyConfig, columns: Optional[np.ndarray] = None,
                     seed: Optional[int] = None, net: Optional[PolicyNet] = None) -> PolicyDay:
    """Weights for trading day t + 1 from the window ending at t.

    Standardized rows 0..window-2 are paired with the raw returns one row later, so the last return used is day t.
    """
    standardized = _window(panel, t, config, columns)
    row = standardized.stop - 1
    columns = standardized.columns
    next_returns = panel.returns[standardized.start + 1:standardized.stop, columns]
    if net is None or net.n_stocks != len(columns):
        net = build_policy_net(len(columns), config.latent_dim, day_seed(config, row) if seed is None else seed)
    diagnostics = train_policy(net, standardized.z[:-1], next_returns, config)
    output = policy_forward(net, standardized.z[-1])
    zero_signal = bool(output.zero_signal)
    if zero_signal:
        log.warning('Zero-signal policy day %s', panel.dates[row].date())
    return PolicyDay(row, columns, output.weights, zero_signal, diagnostics, net)


def random_policy_weights(panel: ReturnsPanel, t: TDate, config: PolicyConfig,
                          columns: Optional[np.ndarray] = None) -> PolicyDay:
    """Weights of the seeded net train_policy_day starts from, left untrained, on the same inputs."""
    standardized = _window(panel, t, config, columns)
    row = standardized.stop - 1
    net = build_policy_net(len(standardized.columns), config.latent_dim, day_seed(config, row))
    output = policy_forward(net, standardized.z[-1])
    return PolicyDay(row, standardized.columns, output.weights, bool(output.zero_signal))


@dataclass
class PolicySignals:
    phi: np.ndarray = field(repr=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, repr=False)


def policy_columns(panel: ReturnsPanel, universe: UniverseMask, row: int, window: int) -> np.ndarray:
    full = panel.full_columns(row - window + 1, row + 1)
    return np.flatnonzero(full & universe.eligible_at(row))


def policy_signals(panel: ReturnsPanel, config: PolicyConfig, rows: range,
                   universe: Optional[UniverseMask] = None, workers: int = 1,
                   baseline: bool = False) -> PolicySignals:
    """Normalized policy weights per decision row. Warm starts run in order and reuse the previous day's
    net while the stock set is unchanged; cold starts fan out across days."""
    universe = UniverseMask.everyone(panel) if universe is None else universe
    rows = [row for row in rows if row >= config.window - 1]
    phi = np.full((panel.n_days, panel.n_stocks), np.nan)
    diagnostics: List[Dict[str, Any]] = []

    def run(row: int, net: Optional[PolicyNet] = None):
        columns = policy_columns(panel, universe, row, config.window)
        try:
            if baseline:
                return random_policy_weights(panel, row, config, columns)
            return train_policy_day(panel, row, config, columns, net=net)
        except (InsufficientStocksError, DegenerateSeriesError) as exc:
            return exc

    if config.warm_start and not baseline:
        previous: Optional[PolicyDay] = None
        days = []
        for row in rows:
            reuse = None
            if previous is not None and previous.net is not None:
                if np.array_equal(previous.columns, policy_columns(panel, universe, row, config.window)):
                    reuse = previous.net
            day = run(row, reuse)
            previous = day if isinstance(day, PolicyDay) else None
            days.append(day)
    else:
        days = ordered_map(run, rows, workers)
    for row, day in zip(rows, days):
        date = panel.dates[row].strftime('%Y-%m-%d')
        if isinstance(day, Exception):
            log.debug('Policy skipped %s: %s', date, day)
            diagnostics.append({'date': date, 'skipped': str(day)})
            continue
        phi[row] = 0.0
        phi[row, day.columns] = day.weights
        final = day.diagnostics[-1] if day.diagnostics else {}
        diagnostics.append({'date': date, 'zero_signal': day.zero_signal, 'epochs': len(day.diagnostics),
                            'loss': final.get('loss'), 'mse': final.get('mse'), 'sharpe': final.get('sharpe')})
        day.net = None if not config.warm_start else day.net
    return PolicySignals(phi, diagnostics)
