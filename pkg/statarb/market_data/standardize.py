import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from statarb.models.errors import (DegenerateSeriesError,
                                   InsufficientHistoryError,
                                   InvalidParameterError)
from statarb.models.panel import ReturnsPanel, TDate
from statarb.utils.checks import is_constant

log = logging.getLogger(__name__)

WINDOW = 252
CAP = 3.0


@dataclass(frozen=True)
class StandardizedWindow:
    start: int
    stop: int
    columns: np.ndarray = field(repr=False)
    z: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    std: np.ndarray = field(repr=False)
    cap: float = field(default=math.inf)

    def transform(self, returns: np.ndarray) -> np.ndarray:
        """Standardizes rows outside the window with the window's statistics."""
        z = (np.asarray(returns, dtype=float) - self.mean) / self.std
        return np.clip(z, -self.cap, self.cap) if math.isfinite(self.cap) else z


@dataclass(frozen=True)
class ScaledWindow:
    start: int
    stop: int
    columns: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    trailing_std: np.ndarray = field(repr=False)


def _window_bounds(panel: ReturnsPanel, t: TDate, length: int) -> tuple:
    if length < 2:
        raise InvalidParameterError(f'window length must be >= 2, got {length}')
    row = panel.row(t)
    start = row - length + 1
    if start < 0:
        raise InsufficientHistoryError(f'window of {length} days ending row {row} starts before the panel')
    return start, row + 1


def _columns(panel: ReturnsPanel, start: int, stop: int, columns: Optional[np.ndarray]) -> np.ndarray:
    full = panel.full_columns(start, stop)
    if columns is None:
        return np.flatnonzero(full)
    columns = np.asarray(columns)
    if columns.dtype == bool:
        columns = np.flatnonzero(columns)
    return columns[full[columns]]


def _drop_or_raise(panel: ReturnsPanel, columns: np.ndarray, degenerate: np.ndarray,
                   drop_degenerate: bool, what: str) -> np.ndarray:
    if not degenerate.any():
        return np.ones(len(columns), dtype=bool)
    tickers = [panel.tickers[column] for column in columns[degenerate]]
    if not drop_degenerate:
        raise DegenerateSeriesError(f'{what} is zero for {tickers}', tickers)
    log.debug('Dropping degenerate series %s (%s)', tickers, what)
    return ~degenerate


def standardize_window(panel: ReturnsPanel, t: TDate, length: int = WINDOW, cap: float = math.inf,
                       columns: Optional[np.ndarray] = None,
                       drop_degenerate: bool = False) -> StandardizedWindow:
    """Z-scores of the `length` days ending at `t` for stocks without missing values.

    Sample statistics use divisor length - 1; entries are clipped to [-cap, cap] when cap is finite.
    """
    start, stop = _window_bounds(panel, t, length)
    columns = _columns(panel, start, stop, columns)
    block = panel.returns[start:stop, columns]
    std = block.std(axis=0, ddof=1)
    keep = _drop_or_raise(panel, columns, is_constant(block) | (std == 0),
                          drop_degenerate, 'window standard deviation')
    columns, block, std = columns[keep], block[:, keep], std[keep]
    mean = block.mean(axis=0)
    z = (block - mean) / std
    if math.isfinite(cap):
        np.clip(z, -cap, cap, out=z)
    return StandardizedWindow(start, stop, columns, z, mean, std, cap)


def trailing_std(panel: ReturnsPanel, start: int, stop: int, columns: np.ndarray,
                 lookback: int = WINDOW) -> np.ndarray:
    """Std (divisor lookback - 1) of the `lookback` days before each row in [start, stop)."""
    first = start - lookback
    if first < 0:
        raise InsufficientHistoryError(f'trailing volatility for row {start} needs {lookback} prior days')
    history = pd.DataFrame(panel.returns[first:stop - 1, columns])
    rolling = history.rolling(lookback)
    std = rolling.std(ddof=1).to_numpy()[lookback - 1:]
    spread = (rolling.max() - rolling.min()).to_numpy()[lookback - 1:]
    return np.where(spread == 0, 0.0, std)


def volatility_scale_window(panel: ReturnsPanel, t: TDate, length: int, lookback: int = WINDOW,
                            columns: Optional[np.ndarray] = None,
                            drop_degenerate: bool = False) -> ScaledWindow:
    """Returns of the `length` days ending at `t` divided by their trailing volatility; no centering or clipping."""
    start, stop = _window_bounds(panel, t, length)
    if start - lookback < 0:
        raise InsufficientHistoryError(f'volatility scaling at row {start} needs {lookback} prior days')
    columns = _columns(panel, start - lookback, stop, columns)
    sigma = trailing_std(panel, start, stop, columns, lookback)
    keep = _drop_or_raise(panel, columns, (sigma == 0).any(axis=0), drop_degenerate, 'trailing volatility')
    columns, sigma = columns[keep], sigma[:, keep]
    s = panel.returns[start:stop, columns] / sigma
    return ScaledWindow(start, stop, columns, s, sigma)
