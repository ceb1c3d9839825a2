import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from statarb.nn.network import Network

TRADING_DAYS = 252


class Position(IntEnum):
    SHORT = -1
    FLAT = 0
    LONG = 1


@dataclass(frozen=True)
class OUParams:
    a: float
    b: float
    var_zeta: float
    r2: float
    k: float = field(default=math.nan)
    m: float = field(default=math.nan)
    sigma_eq: float = field(default=math.nan)
    sigma: float = field(default=math.nan)

    @classmethod
    def from_ar(cls, a: float, b: float, var_zeta: float, r2: float = math.nan) -> 'OUParams':
        if not 0.0 < b < 1.0:
            return cls(a, b, var_zeta, r2)
        k = -math.log(b) * TRADING_DAYS
        sigma_eq = math.sqrt(var_zeta / (1.0 - b * b))
        return cls(a, b, var_zeta, r2, k=k, m=a / (1.0 - b),
                   sigma_eq=sigma_eq, sigma=sigma_eq * math.sqrt(2.0 * k))

    @property
    def mean_reverting(self) -> bool:
        return 0.0 < self.b < 1.0 and self.sigma_eq > 0.0

    @property
    def features(self) -> Tuple[float, float, float, float]:
        return self.a, self.b, self.var_zeta, self.r2


@dataclass(frozen=True)
class ResidualPanel:
    """Out-of-sample residuals, NaN where the stock was not modelable that day."""
    dates: pd.DatetimeIndex = field(repr=False)
    tickers: Tuple[str, ...] = field(repr=False)
    values: np.ndarray = field(compare=False, repr=False)
    model: str = field(default='')
    variant: str = field(default='')
    flagged: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.nonzero(self.present)
        return pd.DataFrame({
            'date': self.dates[rows].strftime('%Y-%m-%d'),
            'ticker': np.asarray(self.tickers, dtype=object)[cols],
            'residual': self.values[rows, cols],
            'model': self.model,
            'variant': self.variant,
        })


@dataclass(frozen=True)
class SignalPanel:
    """Signals per decision day; NaN where the stock was not tradeable."""
    dates: pd.DatetimeIndex = field(repr=False)
    tickers: Tuple[str, ...] = field(repr=False)
    values: np.ndarray = field(compare=False, repr=False)
    states: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    kind: str = field(default='threshold')

    def _state_names(self, rows: np.ndarray, cols: np.ndarray) -> List[str]:
        if self.states is None:
            return [''] * len(rows)
        return [Position(int(state)).name.lower() for state in self.states[rows, cols]]

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.nonzero(~np.isnan(self.values))
        return pd.DataFrame({
            'date': self.dates[rows].strftime('%Y-%m-%d'),
            'ticker': np.asarray(self.tickers, dtype=object)[cols],
            'signal': self.values[rows, cols],
            'state': self._state_names(rows, cols),
        })


@dataclass(frozen=True)
class Performance:
    sharpe: float
    mu: float
    sigma: float
    max_drawdown: float
    days: int
    degenerate: bool = field(default=False)
    curve: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False, repr=False)


@dataclass
class BacktestResult:
    label: str
    model: str
    variant: str
    tickers: Tuple[str, ...] = field(repr=False)
    decision_dates: pd.DatetimeIndex = field(repr=False)
    realized_dates: pd.DatetimeIndex = field(repr=False)
    weights: np.ndarray = field(compare=False, repr=False)
    returns: np.ndarray = field(compare=False, repr=False)
    traded: np.ndarray = field(compare=False, repr=False)
    performance: Performance = field(compare=False)
    residuals: Optional[ResidualPanel] = field(default=None, compare=False, repr=False)
    signals: Optional[SignalPanel] = field(default=None, compare=False, repr=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, compare=False, repr=False)
    networks: Dict[str, Network] = field(default_factory=dict, compare=False, repr=False)

    @property
    def curve(self) -> np.ndarray:
        return self.performance.curve
