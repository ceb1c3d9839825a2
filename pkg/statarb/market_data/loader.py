import logging
import re
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from statarb.io.file import CsvHandler
from statarb.models.errors import DuplicateRowError, PanelParseError
from statarb.models.panel import FactorReturns, GroundTruth, ReturnsPanel

log = logging.getLogger(__name__)

PANEL_COLUMNS = ['date', 'ticker', 'return', 'close', 'mktcap', 'dollar_volume']
NUMERIC_COLUMNS = ['return', 'close', 'mktcap', 'dollar_volume']
DATE_FORMAT = '%Y-%m-%d'

# header is line 1, first data row line 2
_FIRST_LINE = 2


def _require_columns(frame: pd.DataFrame, columns: List[str], path: Path) -> None:
    absent = [column for column in columns if column not in frame.columns]
    if absent:
        raise PanelParseError(f'{path.name} header lacks columns {absent}', 1)


def _parse_dates(frame: pd.DataFrame) -> pd.Series:
    return pd.to_datetime(frame['date'].str.strip(), format=DATE_FORMAT, errors='coerce')


def _parse_numeric(frame: pd.DataFrame, columns: List[str]) -> pd.DataFrame:
    parsed = pd.DataFrame({column: pd.to_numeric(frame[column].str.strip(), errors='coerce')
                           for column in columns})
    return parsed.astype(float)


def _first_bad(bad: pd.DataFrame) -> Optional[tuple]:
    rows = bad.any(axis=1).to_numpy()
    if not rows.any():
        return None
    position = int(np.argmax(rows))
    column = str(bad.columns[int(np.argmax(bad.iloc[position].to_numpy()))])
    return position, column


def _raise_malformed(frame: pd.DataFrame, bad: pd.DataFrame) -> None:
    first = _first_bad(bad)
    if first is None:
        return
    position, column = first
    value = frame.iloc[position][column] if column in frame.columns else ''
    raise PanelParseError(f'malformed {column} value "{value}" in row {list(frame.iloc[position])}',
                          position + _FIRST_LINE)


def _raise_duplicates(frame: pd.DataFrame, keys: List[str]) -> None:
    duplicated = frame.duplicated(subset=keys, keep='first').to_numpy()
    if duplicated.any():
        position = int(np.argmax(duplicated))
        key = ', '.join(str(frame.iloc[position][column]) for column in keys)
        raise DuplicateRowError(f'duplicate row for ({key})', position + _FIRST_LINE)


def _read(path: Path, handler: Optional[CsvHandler]) -> pd.DataFrame:
    handler = handler or CsvHandler()
    try:
        frame = handler.read(path)
    except pd.errors.ParserError as exc:
        match = re.search(r'line (\d+)', str(exc))
        raise PanelParseError(str(exc), int(match.group(1)) if match else 0) from exc
    return frame.fillna('')


def load_returns_panel(path: Path, handler: Optional[CsvHandler] = None) -> ReturnsPanel:
    frame = _read(path, handler)
    _require_columns(frame, PANEL_COLUMNS, path)
    if len(frame) == 0:
        raise PanelParseError(f'{path.name} has no data rows', _FIRST_LINE)
    dates = _parse_dates(frame)
    values = _parse_numeric(frame, NUMERIC_COLUMNS)
    bad = pd.DataFrame({
        'date': dates.isna(),
        'ticker': frame['ticker'].str.strip().str.len() == 0,
    })
    for column in NUMERIC_COLUMNS:
        bad[column] = ~np.isfinite(values[column])
    bad['return'] = bad['return'] | (values['return'] <= -1.0)
    _raise_malformed(frame, bad)

    clean = values.assign(date=dates, ticker=frame['ticker'].str.strip())
    _raise_duplicates(clean, ['date', 'ticker'])
    table = clean.pivot(index='date', columns='ticker', values=NUMERIC_COLUMNS)
    index = pd.DatetimeIndex(clean['date']).unique().sort_values()
    tickers = sorted(clean['ticker'].unique())
    matrices = {column: table[column].reindex(index=index, columns=tickers).to_numpy(dtype=float)
                for column in NUMERIC_COLUMNS}
    missing = np.isnan(matrices['return'])
    log.info('Loaded %s: %d days x %d tickers, %d missing pairs',
             path.name, len(index), len(tickers), int(missing.sum()))
    return ReturnsPanel(index, tuple(tickers), matrices['return'], matrices['close'],
                        matrices['mktcap'], matrices['dollar_volume'], missing)


def load_factor_returns(path: Path, handler: Optional[CsvHandler] = None) -> FactorReturns:
    frame = _read(path, handler)
    _require_columns(frame, ['date', 'rf'], path)
    names = [str(column) for column in frame.columns if column not in ('date', 'rf')]
    if len(names) == 0:
        raise PanelParseError(f'{path.name} has no factor columns', 1)
    dates = _parse_dates(frame)
    values = _parse_numeric(frame, names + ['rf'])
    bad = pd.DataFrame({'date': dates.isna()})
    for column in names + ['rf']:
        bad[column] = ~np.isfinite(values[column])
    _raise_malformed(frame, bad)
    clean = values.assign(date=dates)
    _raise_duplicates(clean, ['date'])
    clean = clean.sort_values('date')
    return FactorReturns(pd.DatetimeIndex(clean['date']), tuple(names),
                         clean[names].to_numpy(dtype=float), clean['rf'].to_numpy(dtype=float))


def write_panel_csv(panel: ReturnsPanel, path: Path, handler: Optional[CsvHandler] = None) -> None:
    handler = handler or CsvHandler()
    handler.write(path, panel.to_frame(), float_format=None)


def write_factor_csv(dates: pd.DatetimeIndex, truth: GroundTruth, path: Path,
                     handler: Optional[CsvHandler] = None) -> None:
    handler = handler or CsvHandler()
    frame = pd.DataFrame({'date': dates.strftime(DATE_FORMAT)})
    for index in range(truth.factors.shape[1]):
        frame[f'factor_{index + 1}'] = truth.factors[:, index]
    frame['rf'] = 0.0
    handler.write(path, frame, float_format=None)
