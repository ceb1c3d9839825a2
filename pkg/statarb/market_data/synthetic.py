import logging
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import signal

from statarb.models.panel import GroundTruth, ReturnsPanel, SyntheticSpec
from statarb.models.results import TRADING_DAYS

log = logging.getLogger(__name__)

CLOSE = 50.0
MKTCAP = 1e10
DOLLAR_VOLUME = 5e7
LOW_CLOSE = 4.0
SMALL_MKTCAP = 5e8
LOW_DOLLAR_VOLUME = 5e5


def ou_paths(kappa: np.ndarray, mean_level: np.ndarray, sigma: np.ndarray, n_steps: int,
             rng: np.random.Generator, start: np.ndarray) -> np.ndarray:
    """Exact daily discretization of dX = k(m - X)dt + s dW; row 0 holds the start values."""
    phi = np.exp(-kappa / TRADING_DAYS)
    sigma_eq = sigma / np.sqrt(2.0 * kappa)
    shocks = rng.standard_normal((n_steps, len(kappa)))
    paths = np.empty((n_steps + 1, len(kappa)))
    paths[0] = start
    for stock in range(len(kappa)):
        drive = mean_level[stock] * (1.0 - phi[stock]) \
            + sigma_eq[stock] * np.sqrt(1.0 - phi[stock] ** 2) * shocks[:, stock]
        paths[1:, stock], _ = signal.lfilter([1.0], [1.0, -phi[stock]], drive, zi=[phi[stock] * start[stock]])
    return paths


def _loadings(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.loadings is not None:
        return np.asarray(spec.loadings, dtype=float)
    loadings = rng.normal(0.0, 1.0, (spec.n_stocks, spec.n_factors))
    if spec.n_factors > 0:
        loadings[:, 0] += 1.0
    return loadings


def _sidecar(spec: SyntheticSpec, value: float, override: float, stocks) -> np.ndarray:
    matrix = np.full((spec.n_days, spec.n_stocks), value)
    matrix[:, list(stocks)] = override
    return matrix


def generate_synthetic_panel(spec: SyntheticSpec) -> Tuple[ReturnsPanel, GroundTruth]:
    """Factor returns plus OU residual increments; bit-identical for a fixed seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    loadings = _loadings(spec, rng)
    factors = rng.standard_normal((spec.n_days, spec.n_factors)) * spec.factor_vols()
    kappa = spec.per_stock('kappa')
    mean_level = spec.per_stock('mean_level')
    sigma = spec.per_stock('sigma')
    start = mean_level + sigma / np.sqrt(2.0 * kappa) * rng.standard_normal(spec.n_stocks)
    paths = ou_paths(kappa, mean_level, sigma, spec.n_days, rng, start)
    increments = np.diff(paths, axis=0)
    returns = factors @ loadings.T + increments
    dates = pd.bdate_range(start=spec.start, periods=spec.n_days)
    panel = ReturnsPanel(dates, tuple(f'S{index:03d}' for index in range(spec.n_stocks)), returns,
                         _sidecar(spec, CLOSE, LOW_CLOSE, spec.low_price),
                         _sidecar(spec, MKTCAP, SMALL_MKTCAP, spec.small_cap),
                         _sidecar(spec, DOLLAR_VOLUME, LOW_DOLLAR_VOLUME, spec.illiquid))
    log.info('Synthetic panel: %d days x %d stocks, %d factors, seed %d',
             spec.n_days, spec.n_stocks, spec.n_factors, spec.seed)
    truth = GroundTruth(factors, loadings, paths, increments, kappa, mean_level, sigma)
    return panel, truth
