import logging
import math

import numpy as np

from statarb.backtest.weights import portfolio_returns
from statarb.models.errors import DimensionMismatchError, InsufficientDataError
from statarb.models.results import TRADING_DAYS, Performance

log = logging.getLogger(__name__)

PERMUTATIONS = 200
BOOTSTRAPS = 1000
MEAN_BLOCK = 20


def max_drawdown(curve: np.ndarray) -> float:
    """Largest peak-to-trough loss of the wealth 1 + curve, starting from wealth 1."""
    wealth = np.concatenate([[1.0], 1.0 + np.asarray(curve, dtype=float)])
    peaks = np.maximum.accumulate(wealth)
    return float(np.max(1.0 - wealth / peaks))


def performance_metrics(returns: np.ndarray) -> Performance:
    """Annualized mu = 252 mean, sigma = sqrt(252) std (divisor T - 1), SR = mu / sigma."""
    returns = np.asarray(returns, dtype=float)
    if len(returns) < 2:
        raise InsufficientDataError(f'performance metrics need 2 daily returns, got {len(returns)}')
    mu = TRADING_DAYS * float(returns.mean())
    degenerate = bool(np.ptp(returns) == 0)
    sigma = 0.0 if degenerate else math.sqrt(TRADING_DAYS) * float(returns.std(ddof=1))
    curve = np.cumprod(1.0 + returns) - 1.0
    sharpe = math.nan if degenerate else mu / sigma
    return Performance(sharpe, mu, sigma, max_drawdown(curve), len(returns), degenerate, curve)


def sharpe_ratio(returns: np.ndarray) -> float:
    """Annualized Sharpe ratio, 0 for a constant series."""
    returns = np.asarray(returns, dtype=float)
    sigma = returns.std(ddof=1)
    return 0.0 if sigma == 0 else float(math.sqrt(TRADING_DAYS) * returns.mean() / sigma)


def date_permuted_returns(weights: np.ndarray, next_returns: np.ndarray, seed: int) -> np.ndarray:
    """Portfolio returns after shuffling which day each weight vector is applied to."""
    order = np.random.default_rng(seed).permutation(len(weights))
    return portfolio_returns(np.asarray(weights)[order], np.asarray(next_returns))


def date_permuted_sharpe(weights: np.ndarray, next_returns: np.ndarray, seed: int,
                         permutations: int = PERMUTATIONS) -> float:
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2 ** 31, permutations)
    return float(np.mean([sharpe_ratio(date_permuted_returns(weights, next_returns, int(child)))
                          for child in seeds]))


def stationary_bootstrap_indices(n: int, n_boot: int, mean_block: float,
                                 rng: np.random.Generator) -> np.ndarray:
    """Index resamples with geometric block lengths of mean `mean_block`, wrapping around the series end."""
    starts = rng.integers(0, n, (n_boot, n))
    jumps = rng.random((n_boot, n)) < 1.0 / mean_block
    indices = np.empty((n_boot, n), dtype=int)
    indices[:, 0] = starts[:, 0]
    for step in range(1, n):
        indices[:, step] = np.where(jumps[:, step], starts[:, step], (indices[:, step - 1] + 1) % n)
    return indices


def _sharpe_rows(samples: np.ndarray) -> np.ndarray:
    sigma = samples.std(axis=1, ddof=1)
    safe = np.where(sigma > 0, sigma, 1.0)
    return np.where(sigma > 0, math.sqrt(TRADING_DAYS) * samples.mean(axis=1) / safe, 0.0)


def stationary_bootstrap_pvalue(a: np.ndarray, b: np.ndarray, n_boot: int = BOOTSTRAPS,
                                mean_block: float = MEAN_BLOCK, seed: int = 0) -> float:
    """One-sided p-value of SR(a) > SR(b) from a paired, centred stationary bootstrap."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f'paired series must share one dimension, got {a.shape} and {b.shape}')
    if len(a) < 3:
        raise InsufficientDataError('the bootstrap needs at least 3 paired days')
    observed = sharpe_ratio(a) - sharpe_ratio(b)
    indices = stationary_bootstrap_indices(len(a), n_boot, mean_block, np.random.default_rng(seed))
    replicated = _sharpe_rows(a[indices]) - _sharpe_rows(b[indices])
    count = int(np.sum(replicated - observed >= observed))
    p_value = (1 + count) / (1 + n_boot)
    log.debug('Bootstrap SR difference %.3f over %d resamples: p=%.4f', observed, n_boot, p_value)
    return p_value
