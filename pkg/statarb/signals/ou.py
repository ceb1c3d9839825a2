import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from statarb.models.errors import InsufficientDataError
from statarb.models.panel import UniverseMask
from statarb.models.results import (TRADING_DAYS, OUParams, Position,
                                    ResidualPanel, SignalPanel)

log = logging.getLogger(__name__)

OU_WINDOW = 60
N_FEATURES = 5


@dataclass(frozen=True)
class OUThresholds:
    open_long: float = -1.25
    open_short: float = 1.25
    close_long: float = -0.5
    close_short: float = 0.75
    min_r2: float = 0.25


THRESHOLDS = OUThresholds()


@dataclass(frozen=True)
class OUPanelFit:
    """AR(1) fits of the cumulated residuals, one entry per column of the window block."""
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    var_zeta: np.ndarray = field(repr=False)
    r2: np.ndarray = field(repr=False)
    x_last: np.ndarray = field(repr=False)

    @property
    def mean_reverting(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return (self.b > 0) & (self.b < 1) & (self.sigma_eq > 0)

    @property
    def k(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where((self.b > 0) & (self.b < 1), -np.log(self.b) * TRADING_DAYS, np.nan)

    @property
    def m(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where((self.b > 0) & (self.b < 1), self.a / (1.0 - self.b), np.nan)

    @property
    def sigma_eq(self) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where((self.b > 0) & (self.b < 1), np.sqrt(self.var_zeta / (1.0 - self.b ** 2)), np.nan)

    @property
    def s_scores(self) -> np.ndarray:
        """NaN where the fit does not mean-revert."""
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(self.mean_reverting, (self.x_last - self.m) / self.sigma_eq, np.nan)

    def features(self) -> np.ndarray:
        """(a, b, var_zeta, r2, s) per column, NaN rows for non-mean-reverting fits."""
        stacked = np.stack([self.a, self.b, self.var_zeta, self.r2, self.s_scores], axis=-1)
        return np.where(self.mean_reverting[:, None], stacked, np.nan)

    def params(self, column: int) -> OUParams:
        return OUParams.from_ar(float(self.a[column]), float(self.b[column]),
                                float(self.var_zeta[column]), float(self.r2[column]))


def estimate_ou_panel(block: np.ndarray, min_points: int = OU_WINDOW) -> OUPanelFit:
    """Regresses X[n+1] = a + b X[n] per column, with X the cumulative sum of the residual block."""
    block = np.asarray(block, dtype=float)
    block = block[:, None] if block.ndim == 1 else block
    if len(block) < min_points:
        raise InsufficientDataError(f'OU estimation needs {min_points} residuals, got {len(block)}')
    x_all = np.cumsum(block, axis=0)
    x, y = x_all[:-1], x_all[1:]
    pairs = len(x)
    x_mean, y_mean = x.mean(axis=0), y.mean(axis=0)
    dx, dy = x - x_mean, y - y_mean
    sxx = (dx * dx).sum(axis=0)
    syy = (dy * dy).sum(axis=0)
    sxy = (dx * dy).sum(axis=0)
    b = np.where(sxx > 0, sxy / np.where(sxx > 0, sxx, 1.0), 0.0)
    a = y_mean - b * x_mean
    residuals = y - a - b * x
    ssr = (residuals * residuals).sum(axis=0)
    var_zeta = ssr / (pairs - 2)
    r2 = np.where(syy > 0, 1.0 - ssr / np.where(syy > 0, syy, 1.0), 0.0)
    return OUPanelFit(a, b, var_zeta, r2, x_all[-1])


def estimate_ou(residuals: np.ndarray, min_points: int = OU_WINDOW) -> OUParams:
    return estimate_ou_panel(np.asarray(residuals, dtype=float).reshape(-1, 1), min_points).params(0)


def s_score(params: OUParams, x_t: float) -> Optional[float]:
    if not params.mean_reverting:
        return None
    return (x_t - params.m) / params.sigma_eq


def ou_signal_step(state: Position, s: Optional[float], r2: float,
                   thresholds: OUThresholds = THRESHOLDS) -> Tuple[Position, int]:
    if s is None or not math.isfinite(s) or not r2 >= thresholds.min_r2:
        return Position.FLAT, 0
    if state == Position.FLAT:
        if s < thresholds.open_long:
            state = Position.LONG
        elif s > thresholds.open_short:
            state = Position.SHORT
    elif state == Position.LONG and s > thresholds.close_long:
        state = Position.FLAT
    elif state == Position.SHORT and s < thresholds.close_short:
        state = Position.FLAT
    return state, int(state)


def step_positions(states: np.ndarray, s: np.ndarray, r2: np.ndarray,
                   thresholds: OUThresholds = THRESHOLDS) -> np.ndarray:
    """Vectorized ou_signal_step over a cross-section of int states."""
    with np.errstate(invalid='ignore'):
        gated = ~np.isfinite(s) | ~(r2 >= thresholds.min_r2)
        flat, long, short = states == Position.FLAT, states == Position.LONG, states == Position.SHORT
        new = states.copy()
        new[flat & (s < thresholds.open_long)] = Position.LONG
        new[flat & (s > thresholds.open_short)] = Position.SHORT
        new[long & (s > thresholds.close_long)] = Position.FLAT
        new[short & (s < thresholds.close_short)] = Position.FLAT
    new[gated] = Position.FLAT
    return new


@dataclass
class OUSignals:
    signals: SignalPanel = field(repr=False)
    features: np.ndarray = field(repr=False)


def ou_signals(residuals: ResidualPanel, rows: Optional[range] = None, universe: Optional[UniverseMask] = None,
               window: int = OU_WINDOW, thresholds: OUThresholds = THRESHOLDS) -> OUSignals:
    """Threshold signals per decision row t from residuals in rows [t - window + 1, t].

    Positions carry from one decision row to the next; a stock without a full residual window goes flat.
    """
    values = residuals.values
    n_days, n_stocks = values.shape
    phi = np.full((n_days, n_stocks), np.nan)
    states = np.zeros((n_days, n_stocks), dtype=int)
    features = np.full((n_days, n_stocks, N_FEATURES), np.nan)
    current = np.zeros(n_stocks, dtype=int)
    rows = range(window - 1, n_days) if rows is None else rows
    for row in rows:
        if row < window - 1:
            continue
        block = values[row - window + 1:row + 1]
        columns = np.flatnonzero(~np.isnan(block).any(axis=0))
        if universe is not None:
            columns = columns[universe.eligible_at(row)[columns]]
        previous = current.copy()
        current = np.zeros(n_stocks, dtype=int)
        if len(columns) == 0:
            continue
        fit = estimate_ou_panel(block[:, columns], window)
        current[columns] = step_positions(previous[columns], fit.s_scores, fit.r2, thresholds)
        phi[row, columns] = current[columns]
        states[row] = current
        features[row, columns] = fit.features()
    log.debug('OU signals for %s %s: %d decision rows', residuals.model, residuals.variant, len(rows))
    return OUSignals(SignalPanel(residuals.dates, residuals.tickers, phi, states, 'threshold'), features)
