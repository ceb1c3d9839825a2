from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from statarb.models.errors import (DimensionMismatchError,
                                   InvalidParameterError,
                                   NonFiniteGradientError)
from statarb.nn.network import Network

LEARNING_RATE = 1e-3


@dataclass
class AdamState:
    lr: float = field(default=LEARNING_RATE)
    beta1: float = field(default=0.9)
    beta2: float = field(default=0.999)
    eps: float = field(default=1e-8)
    step: int = field(default=0)
    first: List[np.ndarray] = field(default_factory=list, repr=False)
    second: List[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.lr < 0:
            raise InvalidParameterError(f'learning rate must be >= 0, got {self.lr}')
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidParameterError(f'Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}')

    @classmethod
    def for_parameters(cls, parameters: Sequence[np.ndarray], lr: float = LEARNING_RATE) -> 'AdamState':
        return cls(lr=lr, first=[np.zeros_like(param) for param in parameters],
                   second=[np.zeros_like(param) for param in parameters])


def _check(parameters: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    if len(grads) != len(parameters) or len(state.first) != len(parameters):
        raise DimensionMismatchError(f'{len(grads)} gradients and {len(state.first)} moments '
                                     f'for {len(parameters)} parameters')
    diagnostics = []
    for index, (param, grad) in enumerate(zip(parameters, grads)):
        if np.shape(grad) != param.shape:
            raise DimensionMismatchError(f'gradient {index} has shape {np.shape(grad)}, expected {param.shape}')
        bad = np.size(grad) - np.count_nonzero(np.isfinite(grad))
        if bad:
            diagnostics.append(f'parameter {index} {param.shape}: {bad} non-finite entries')
    if diagnostics:
        raise NonFiniteGradientError('update rejected', diagnostics)


def adam_update(parameters: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """In-place bias-corrected Adam update; nothing changes when a gradient is non-finite."""
    if not state.first:
        state.first = [np.zeros_like(param) for param in parameters]
        state.second = [np.zeros_like(param) for param in parameters]
    _check(parameters, grads, state)
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for param, grad, first, second in zip(parameters, grads, state.first, state.second):
        first *= state.beta1
        first += (1.0 - state.beta1) * grad
        second *= state.beta2
        second += (1.0 - state.beta2) * grad * grad
        param -= state.lr * (first / correction1) / (np.sqrt(second / correction2) + state.eps)


def adam_step(net: Network, grads: Sequence[np.ndarray], state: AdamState) -> None:
    adam_update(net.parameters, grads, state)
    net.touch()
