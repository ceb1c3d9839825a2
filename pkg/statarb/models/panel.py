from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from statarb.models.errors import (DimensionMismatchError,
                                   InvalidParameterError,
                                   MisalignedDatesError)

TDate = Union[int, str, pd.Timestamp, np.datetime64]
TScalars = Union[float, Sequence[float]]


def _read_only(values: np.ndarray, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def as_dates(values) -> pd.DatetimeIndex:
    dates = pd.DatetimeIndex(pd.to_datetime(values))
    if dates.has_duplicates or not dates.is_monotonic_increasing:
        raise MisalignedDatesError('dates must be strictly increasing without duplicates')
    return dates


@dataclass(frozen=True)
class ReturnsPanel:
    """Dense T x N daily panel. Missing (date, ticker) pairs are NaN in every matrix."""
    dates: pd.DatetimeIndex = field(repr=False)
    tickers: Tuple[str, ...] = field(repr=True)
    returns: np.ndarray = field(compare=False, repr=False)
    close: np.ndarray = field(compare=False, repr=False)
    mktcap: np.ndarray = field(compare=False, repr=False)
    dollar_volume: np.ndarray = field(compare=False, repr=False)
    missing: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        dates = as_dates(self.dates)
        tickers = tuple(str(ticker) for ticker in self.tickers)
        if len(set(tickers)) != len(tickers):
            raise InvalidParameterError('tickers must be unique')
        shape = (len(dates), len(tickers))
        matrices = {}
        for name in ('returns', 'close', 'mktcap', 'dollar_volume'):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != shape:
                raise DimensionMismatchError(f'{name} has shape {matrix.shape}, expected {shape}')
            matrices[name] = matrix
        missing = np.isnan(matrices['returns']) if self.missing is None else np.asarray(self.missing, dtype=bool)
        if missing.shape != shape:
            raise DimensionMismatchError(f'missing-mask has shape {missing.shape}, expected {shape}')
        returns = np.where(missing, np.nan, matrices['returns'])
        present = returns[~missing]
        if not np.all(np.isfinite(present)) or np.any(present <= -1.0):
            raise InvalidParameterError('returns must be finite and greater than -1 where present')
        object.__setattr__(self, 'dates', dates)
        object.__setattr__(self, 'tickers', tickers)
        object.__setattr__(self, 'returns', _read_only(returns))
        for name in ('close', 'mktcap', 'dollar_volume'):
            object.__setattr__(self, name, _read_only(np.where(missing, np.nan, matrices[name])))
        object.__setattr__(self, 'missing', _read_only(missing, dtype=bool))

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def n_stocks(self) -> int:
        return len(self.tickers)

    @property
    def mask(self) -> np.ndarray:
        assert self.missing is not None
        return self.missing

    def row(self, date: TDate) -> int:
        if isinstance(date, (int, np.integer)):
            row = int(date)
            if not 0 <= row < self.n_days:
                raise MisalignedDatesError(f'row {row} outside panel of {self.n_days} days')
            return row
        try:
            return int(self.dates.get_loc(pd.Timestamp(date)))
        except KeyError as exc:
            raise MisalignedDatesError(f'{date} is not a panel date') from exc

    def present(self, row: int) -> np.ndarray:
        return ~self.mask[row]

    def full_columns(self, start: int, stop: int) -> np.ndarray:
        """Stocks without a missing value in rows [start, stop)."""
        if start < 0 or stop > self.n_days or start >= stop:
            return np.zeros(self.n_stocks, dtype=bool)
        return ~self.mask[start:stop].any(axis=0)

    def with_returns(self, returns: np.ndarray) -> 'ReturnsPanel':
        returns = np.asarray(returns, dtype=float)
        return replace(self, returns=returns, missing=self.mask | np.isnan(returns))

    def subtract(self, rate: np.ndarray) -> 'ReturnsPanel':
        rate = np.asarray(rate, dtype=float)
        if rate.shape != (self.n_days,):
            raise DimensionMismatchError(f'rate has shape {rate.shape}, expected ({self.n_days},)')
        return self.with_returns(self.returns - rate[:, None])

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.nonzero(~self.mask)
        return pd.DataFrame({
            'date': self.dates[rows].strftime('%Y-%m-%d'),
            'ticker': np.asarray(self.tickers, dtype=object)[cols],
            'return': self.returns[rows, cols],
            'close': self.close[rows, cols],
            'mktcap': self.mktcap[rows, cols],
            'dollar_volume': self.dollar_volume[rows, cols],
        })


@dataclass(frozen=True)
class FactorReturns:
    dates: pd.DatetimeIndex = field(repr=False)
    names: Tuple[str, ...] = field(repr=True)
    values: np.ndarray = field(compare=False, repr=False)
    rf: np.ndarray = field(compare=False, repr=False)

    def __post_init__(self):
        dates = as_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(dates), len(self.names)):
            raise DimensionMismatchError(f'factor values have shape {values.shape}')
        rf = np.asarray(self.rf, dtype=float)
        if rf.shape != (len(dates),):
            raise DimensionMismatchError(f'rf has shape {rf.shape}')
        object.__setattr__(self, 'dates', dates)
        object.__setattr__(self, 'names', tuple(self.names))
        object.__setattr__(self, 'values', _read_only(values))
        object.__setattr__(self, 'rf', _read_only(rf))

    def select(self, columns: Optional[Sequence[str]]) -> 'FactorReturns':
        if columns is None:
            return self
        unknown = [name for name in columns if name not in self.names]
        if unknown:
            raise InvalidParameterError(f'unknown factor columns {unknown}, available {list(self.names)}')
        index = [self.names.index(name) for name in columns]
        return FactorReturns(self.dates, tuple(columns), self.values[:, index], self.rf)

    def _positions(self, dates: pd.DatetimeIndex) -> np.ndarray:
        positions = self.dates.get_indexer(dates)
        if np.any(positions < 0):
            absent = dates[positions < 0]
            raise MisalignedDatesError(
                f'{len(absent)} panel dates have no factor returns, first {absent[0].date()}')
        return positions

    def align(self, dates: pd.DatetimeIndex) -> np.ndarray:
        return self.values[self._positions(dates)]

    def align_rf(self, dates: pd.DatetimeIndex) -> np.ndarray:
        return self.rf[self._positions(dates)]


@dataclass(frozen=True)
class UniverseMask:
    """Month-end eligibility; the vector of rebalance i holds until rebalance i + 1."""
    dates: pd.DatetimeIndex = field(repr=True)
    rows: np.ndarray = field(compare=False, repr=False)
    eligible: np.ndarray = field(compare=False, repr=False)

    @classmethod
    def everyone(cls, panel: ReturnsPanel) -> 'UniverseMask':
        return cls(panel.dates[:1], np.array([0]), np.ones((1, panel.n_stocks), dtype=bool))

    def eligible_at(self, row: int) -> np.ndarray:
        position = int(np.searchsorted(self.rows, row, side='right')) - 1
        if position < 0:
            return np.zeros(self.eligible.shape[1], dtype=bool)
        return self.eligible[position].copy()


@dataclass
class SyntheticSpec:
    n_stocks: int = 10
    n_days: int = 504
    n_factors: int = 1
    loadings: Optional[np.ndarray] = field(default=None, repr=False)
    factor_vol: TScalars = 0.01
    kappa: TScalars = 8.0
    mean_level: TScalars = 0.0
    sigma: TScalars = 0.2
    seed: int = 0
    start: str = '2000-01-03'
    low_price: List[int] = field(default_factory=list)
    small_cap: List[int] = field(default_factory=list)
    illiquid: List[int] = field(default_factory=list)

    def per_stock(self, name: str) -> np.ndarray:
        return np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (self.n_stocks,)).copy()

    def factor_vols(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.factor_vol, dtype=float), (self.n_factors,)).copy()

    def violations(self) -> List[str]:
        violations = []
        if self.n_stocks < 1:
            violations.append(f'n_stocks must be >= 1, got {self.n_stocks}')
        if self.n_days < 2:
            violations.append(f'n_days must be >= 2, got {self.n_days}')
        if self.n_factors < 0:
            violations.append(f'n_factors must be >= 0, got {self.n_factors}')
        if violations:
            return violations
        try:
            if np.any(self.per_stock('kappa') <= 0):
                violations.append('kappa must be > 0')
            if np.any(self.per_stock('sigma') < 0):
                violations.append('sigma must be >= 0')
            if np.any(self.factor_vols() < 0):
                violations.append('factor_vol must be >= 0')
            self.per_stock('mean_level')
        except ValueError as exc:
            violations.append(f'per-stock parameter does not broadcast: {exc}')
        if self.loadings is not None and np.shape(self.loadings) != (self.n_stocks, self.n_factors):
            violations.append(f'loadings must have shape ({self.n_stocks}, {self.n_factors})')
        for name in ('low_price', 'small_cap', 'illiquid'):
            outside = [idx for idx in getattr(self, name) if not 0 <= idx < self.n_stocks]
            if outside:
                violations.append(f'{name} indexes {outside} outside 0..{self.n_stocks - 1}')
        return violations

    def validate(self) -> None:
        violations = self.violations()
        if violations:
            raise InvalidParameterError('; '.join(violations))


@dataclass(frozen=True)
class GroundTruth:
    factors: np.ndarray = field(repr=False)
    loadings: np.ndarray = field(repr=False)
    paths: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    mean_level: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    @property
    def sigma_eq(self) -> np.ndarray:
        return self.sigma / np.sqrt(2.0 * self.kappa)
