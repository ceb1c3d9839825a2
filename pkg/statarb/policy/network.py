import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from statarb.factors.autoencoder import init_autoencoder
from statarb.models.errors import (DegenerateVarianceError,
                                   DimensionMismatchError,
                                   InsufficientDataError,
                                   InvalidParameterError)
from statarb.nn.losses import (l1_normalize, l1_normalize_backward, mse_loss,
                               sharpe_loss)
from statarb.nn.network import Network, TRng, as_generator
from statarb.utils.checks import require_finite

log = logging.getLogger(__name__)

# relu encoder with bias, tanh decoder with bias, no dropout
AE_VARIANT = 7


class PolicyNet:
    """Autoencoder whose reconstruction error feeds a bias-free tanh policy head: w = tanh(W2 (Z_hat - Z))."""

    def __init__(self, autoencoder: Network, policy: np.ndarray) -> None:
        policy = np.array(policy, dtype=float)
        n = autoencoder.in_dim
        if autoencoder.out_dim != n or policy.shape != (n, n):
            raise DimensionMismatchError(f'policy head {policy.shape} does not match {n} stocks')
        self.autoencoder = autoencoder
        self.policy = require_finite(policy, 'policy weights')

    @property
    def n_stocks(self) -> int:
        return self.autoencoder.in_dim

    @property
    def latent_dim(self) -> int:
        return self.autoencoder.layers[0].out_dim

    @property
    def parameters(self) -> List[np.ndarray]:
        return [*self.autoencoder.parameters, self.policy]

    @property
    def n_parameters(self) -> int:
        return self.autoencoder.n_parameters + self.policy.size

    def touch(self) -> None:
        self.autoencoder.touch()

    def copy(self) -> 'PolicyNet':
        return PolicyNet(self.autoencoder.copy(), self.policy.copy())


def build_policy_net(n: int, latent: int, seed: TRng = 0) -> PolicyNet:
    """The autoencoder is drawn first from default_rng(seed), then the policy head from the same stream."""
    if not 1 <= latent < n:
        raise InvalidParameterError(f'latent dimension must lie in 1..{n - 1} for {n} stocks, got {latent}')
    rng = as_generator(seed)
    assert rng is not None
    autoencoder = init_autoencoder(n, AE_VARIANT, latent, rng)
    bound = np.sqrt(6.0 / (2 * n))
    return PolicyNet(autoencoder, rng.uniform(-bound, bound, (n, n)))


@dataclass
class PolicyOutput:
    reconstruction: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def zero_signal(self) -> np.ndarray:
        return np.abs(self.raw).sum(axis=-1) == 0


def _head(net: PolicyNet, z: np.ndarray, reconstruction: np.ndarray) -> PolicyOutput:
    residual = reconstruction - z
    raw = np.tanh(residual @ net.policy.T)
    return PolicyOutput(reconstruction, residual, raw, l1_normalize(raw))


def policy_forward(net: PolicyNet, z: np.ndarray) -> PolicyOutput:
    """Deterministic pass for one day (vector) or a window of days (rows)."""
    z = np.asarray(z, dtype=float)
    return _head(net, z, net.autoencoder.predict(z))


@dataclass
class PolicyLoss:
    loss: float
    grads: List[np.ndarray] = field(repr=False)
    mse: float
    sharpe: float
    degenerate: bool = field(default=False)


def policy_loss(net: PolicyNet, z: np.ndarray, next_returns: np.ndarray, gearing: float) -> PolicyLoss:
    """gearing * MSE(Z, Z_hat) - (1 - gearing) * Sharpe of sum_i w_it r_i,t+1, with gradients for every parameter.

    A degenerate Sharpe leaves only the reconstruction term.
    """
    z = np.asarray(z, dtype=float)
    next_returns = require_finite(next_returns, 'next-day returns')
    if next_returns.shape != z.shape:
        raise DimensionMismatchError(f'returns {next_returns.shape} do not match inputs {z.shape}')
    trace = net.autoencoder.forward(z)
    out = _head(net, z, trace.output)
    mse, grad_mse = mse_loss(z, out.reconstruction)
    grad_reconstruction = gearing * grad_mse
    grad_policy = np.zeros_like(net.policy)
    sharpe, degenerate = float('nan'), False
    loss = gearing * mse
    if gearing < 1.0:
        try:
            negative_sharpe, grad_portfolio = sharpe_loss((out.weights * next_returns).sum(axis=1))
        except (DegenerateVarianceError, InsufficientDataError) as exc:
            log.debug('Policy Sharpe term dropped: %s', exc)
            degenerate = True
        else:
            sharpe = -negative_sharpe
            loss += (1.0 - gearing) * negative_sharpe
            grad_weights = (1.0 - gearing) * grad_portfolio[:, None] * next_returns
            grad_pre = l1_normalize_backward(out.raw, grad_weights) * (1.0 - out.raw * out.raw)
            grad_policy = grad_pre.T @ out.residual
            grad_reconstruction = grad_reconstruction + grad_pre @ net.policy
    grads = net.autoencoder.backward(trace, grad_reconstruction).params
    return PolicyLoss(float(loss), [*grads, grad_policy], mse, sharpe, degenerate)
