from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd
import pytest

from statarb.market_data.synthetic import generate_synthetic_panel
from statarb.models.panel import (FactorReturns, GroundTruth, ReturnsPanel,
                                  SyntheticSpec)
from statarb.service import synthetic_factor_returns


def make_panel(returns: np.ndarray, start: str = '2020-01-01', close: float = 50.0) -> ReturnsPanel:
    returns = np.asarray(returns, dtype=float)
    dates = pd.bdate_range(start=start, periods=returns.shape[0])
    tickers = tuple(f'S{index:03d}' for index in range(returns.shape[1]))
    ones = np.ones_like(returns)
    return ReturnsPanel(dates, tickers, returns, close * ones, 1e10 * ones, 5e7 * ones)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture(scope='session')
def synthetic() -> Tuple[ReturnsPanel, GroundTruth]:
    return generate_synthetic_panel(SyntheticSpec(n_stocks=10, n_days=420, n_factors=2, seed=3))


@pytest.fixture(scope='session')
def panel(synthetic) -> ReturnsPanel:
    return synthetic[0]


@pytest.fixture(scope='session')
def factors(synthetic) -> FactorReturns:
    return synthetic_factor_returns(*synthetic)


@pytest.fixture
def panel_csv(tmp_path: Path) -> Path:
    path = tmp_path / 'panel.csv'
    path.write_text('date,ticker,return,close,mktcap,dollar_volume\n'
                    '2020-01-02,AAA,0.01,10,2e9,5e6\n'
                    '2020-01-02,BBB,-0.02,20,3e9,6e6\n'
                    '2020-01-03,AAA,0.03,10.3,2e9,5e6\n'
                    '2020-01-06,BBB,0.00,19.6,3e9,6e6\n'
                    '2020-01-06,AAA,-0.01,10.2,2e9,5e6\n', encoding='utf-8')
    return path
