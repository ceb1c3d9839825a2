import numpy as np

from statarb.models.errors import DimensionMismatchError
from statarb.nn.losses import l1_normalize


def normalize_weights(phi: np.ndarray) -> np.ndarray:
    """phi / |phi|_1 per row; untradeable (NaN) entries get zero weight and all-zero rows stay zero."""
    phi = np.asarray(phi, dtype=float)
    return l1_normalize(np.where(np.isnan(phi), 0.0, phi))


def portfolio_return(weights: np.ndarray, next_returns: np.ndarray) -> float:
    """sum_i w_i r_i; a stock without a return on the realization day contributes nothing."""
    weights = np.asarray(weights, dtype=float)
    next_returns = np.asarray(next_returns, dtype=float)
    if weights.shape != next_returns.shape:
        raise DimensionMismatchError(f'weights {weights.shape} and returns {next_returns.shape} are misaligned')
    return float(np.dot(weights, np.where(np.isnan(next_returns), 0.0, next_returns)))


def portfolio_returns(weights: np.ndarray, next_returns: np.ndarray) -> np.ndarray:
    if weights.shape != next_returns.shape:
        raise DimensionMismatchError(f'weights {weights.shape} and returns {next_returns.shape} are misaligned')
    return (weights * np.where(np.isnan(next_returns), 0.0, next_returns)).sum(axis=1)
