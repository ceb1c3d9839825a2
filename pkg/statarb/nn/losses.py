from typing import Tuple

import numpy as np

from statarb.models.errors import (DegenerateVarianceError,
                                   DimensionMismatchError,
                                   InsufficientDataError)
from statarb.models.results import TRADING_DAYS

ANNUALIZE = float(np.sqrt(TRADING_DAYS))
# sigma below this fraction of the largest |r| counts as zero
DEGENERATE_RATIO = 1e-12


def mse_loss(target: np.ndarray, output: np.ndarray) -> Tuple[float, np.ndarray]:
    target = np.asarray(target, dtype=float)
    output = np.asarray(output, dtype=float)
    if target.shape != output.shape:
        raise DimensionMismatchError(f'mse_loss shapes differ: {target.shape} vs {output.shape}')
    diff = output - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def sharpe_moments(returns: np.ndarray) -> Tuple[float, float]:
    returns = np.asarray(returns, dtype=float)
    if returns.ndim != 1 or len(returns) < 2:
        raise InsufficientDataError(f'a Sharpe ratio needs at least 2 returns, got shape {returns.shape}')
    mu = float(returns.mean())
    sigma = float(returns.std())
    scale = float(np.max(np.abs(returns)))
    if sigma == 0.0 or sigma <= DEGENERATE_RATIO * scale:
        raise DegenerateVarianceError(f'return series of {len(returns)} days has zero variance')
    return mu, sigma


def sharpe_loss(returns: np.ndarray) -> Tuple[float, np.ndarray]:
    """-sqrt(252) mu / sigma with the divisor-T standard deviation, and its gradient per daily return."""
    returns = np.asarray(returns, dtype=float)
    mu, sigma = sharpe_moments(returns)
    n = len(returns)
    grad = -ANNUALIZE / (n * sigma) * (1.0 - mu * (returns - mu) / (sigma * sigma))
    return -ANNUALIZE * mu / sigma, grad


def l1_normalize(outputs: np.ndarray) -> np.ndarray:
    """Rows scaled to unit gross exposure; all-zero rows stay zero."""
    outputs = np.asarray(outputs, dtype=float)
    gross = np.abs(outputs).sum(axis=-1, keepdims=True)
    safe = np.where(gross > 0, gross, 1.0)
    return np.where(gross > 0, outputs / safe, 0.0)


def l1_normalize_backward(outputs: np.ndarray, grad_weights: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of l1_normalize: (g - sign(o) * <g, w>) / |o|_1 per row."""
    outputs = np.asarray(outputs, dtype=float)
    grad_weights = np.asarray(grad_weights, dtype=float)
    gross = np.abs(outputs).sum(axis=-1, keepdims=True)
    safe = np.where(gross > 0, gross, 1.0)
    weights = outputs / safe
    inner = (grad_weights * weights).sum(axis=-1, keepdims=True)
    grad = (grad_weights - np.sign(outputs) * inner) / safe
    return np.where(gross > 0, grad, 0.0)
