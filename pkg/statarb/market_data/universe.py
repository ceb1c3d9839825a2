import logging

import numpy as np
import pandas as pd

from statarb.models.panel import ReturnsPanel, UniverseMask

log = logging.getLogger(__name__)

MEDIAN_DAYS = 20
MIN_CLOSE = 5.0
MIN_MKTCAP = 1e9
MIN_DOLLAR_VOLUME = 1e6


def month_end_rows(dates: pd.DatetimeIndex) -> np.ndarray:
    """Last trading day of each calendar month; the final date only on a business month end."""
    if len(dates) == 0:
        return np.zeros(0, dtype=int)
    months = dates.to_period('M')
    rows = list(np.nonzero(months[1:] != months[:-1])[0])
    if pd.offsets.BMonthEnd().is_on_offset(dates[-1]):
        rows.append(len(dates) - 1)
    return np.asarray(rows, dtype=int)


def _eligible(panel: ReturnsPanel, row: int, lookback: int, min_close: float,
              min_mktcap: float, min_dollar_volume: float) -> np.ndarray:
    start = row - lookback + 1
    if start < 0:
        return np.zeros(panel.n_stocks, dtype=bool)
    full = panel.full_columns(start, row + 1)
    with np.errstate(invalid='ignore'):
        close = panel.close[row] >= min_close
        mktcap = np.median(panel.mktcap[start:row + 1], axis=0) >= min_mktcap
        volume = np.median(panel.dollar_volume[start:row + 1], axis=0) >= min_dollar_volume
    return full & close & mktcap & volume


def build_universe(panel: ReturnsPanel, lookback: int = MEDIAN_DAYS, min_close: float = MIN_CLOSE,
                   min_mktcap: float = MIN_MKTCAP,
                   min_dollar_volume: float = MIN_DOLLAR_VOLUME) -> UniverseMask:
    rows = month_end_rows(panel.dates)
    eligible = np.zeros((len(rows), panel.n_stocks), dtype=bool)
    for index, row in enumerate(rows):
        eligible[index] = _eligible(panel, int(row), lookback, min_close, min_mktcap, min_dollar_volume)
    if len(rows) > 0 and rows[0] < lookback - 1:
        log.debug('First rebalance %s has fewer than %d days of history',
                  panel.dates[rows[0]].date(), lookback)
    log.info('Universe: %d rebalances, %.1f eligible stocks on average',
             len(rows), float(eligible.sum(axis=1).mean()) if len(rows) else 0.0)
    return UniverseMask(panel.dates[rows], rows, eligible)
