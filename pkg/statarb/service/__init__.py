import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from statarb.io.file import JsonHandler
from statarb.market_data.loader import load_factor_returns, load_returns_panel
from statarb.market_data.synthetic import generate_synthetic_panel
from statarb.market_data.universe import build_universe
from statarb.models.config import DataConfig, RunConfig
from statarb.models.panel import (FactorReturns, GroundTruth, ReturnsPanel,
                                  SyntheticSpec, UniverseMask)
from statarb.source.config.builder import (DataConfigBuilder,
                                           OutputConfigBuilder,
                                           StrategySpecBuilder,
                                           SyntheticSpecBuilder)
from statarb.source.config.factory import JsonConfigFactory
from statarb.source.config.repository import JsonConfigRepository
from statarb.source.gateway import IConfigFactory

log = logging.getLogger(__name__)

TMarket = Tuple[ReturnsPanel, Optional[FactorReturns], UniverseMask]


def json_config_factory() -> IConfigFactory:
    return JsonConfigFactory(DataConfigBuilder(SyntheticSpecBuilder()),
                             StrategySpecBuilder(),
                             OutputConfigBuilder(),
                             JsonConfigRepository(JsonHandler()))


def read_config(path: Path) -> RunConfig:
    return json_config_factory().run_config(path)


def synthetic_factor_returns(panel: ReturnsPanel, truth: GroundTruth) -> FactorReturns:
    names = tuple(f'factor_{index + 1}' for index in range(truth.factors.shape[1]))
    return FactorReturns(panel.dates, names, truth.factors, np.zeros(panel.n_days))


def synthetic_market(spec: SyntheticSpec) -> Tuple[ReturnsPanel, FactorReturns, GroundTruth]:
    panel, truth = generate_synthetic_panel(spec)
    return panel, synthetic_factor_returns(panel, truth), truth


def load_market(data: DataConfig) -> TMarket:
    """Panel, optional factor returns and the universe mask described by the data section."""
    factors: Optional[FactorReturns] = None
    if data.source == 'synthetic':
        panel, factors, _ = synthetic_market(data.synthetic or SyntheticSpec())
    else:
        assert data.path is not None
        panel = load_returns_panel(data.path)
        if data.factors is not None:
            factors = load_factor_returns(data.factors)
        if data.subtract_rf and factors is not None:
            panel = panel.subtract(factors.align_rf(panel.dates))
            log.info('Subtracted the risk-free rate from %d days of returns', panel.n_days)
    universe = build_universe(panel) if data.universe else UniverseMask.everyone(panel)
    return panel, factors, universe
