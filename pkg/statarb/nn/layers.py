from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from statarb.models.errors import InvalidParameterError


class Activation(str, Enum):
    TANH = 'tanh'
    RELU = 'relu'
    IDENTITY = 'identity'


def activate(kind: Activation, pre: np.ndarray) -> np.ndarray:
    if kind == Activation.TANH:
        return np.tanh(pre)
    if kind == Activation.RELU:
        return np.maximum(pre, 0.0)
    return pre.copy()


def activation_grad(kind: Activation, pre: np.ndarray, out: np.ndarray) -> np.ndarray:
    if kind == Activation.TANH:
        return 1.0 - out * out
    if kind == Activation.RELU:
        # subgradient at zero is zero
        return (pre > 0.0).astype(float)
    return np.ones_like(pre)


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation = field(default=Activation.IDENTITY)
    has_bias: bool = field(default=True)
    dropout: float = field(default=0.0)

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise InvalidParameterError(f'layer dims must be >= 1, got {self.in_dim}->{self.out_dim}')
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidParameterError(f'dropout must lie in [0, 1), got {self.dropout}')
        object.__setattr__(self, 'activation', Activation(self.activation))

    @property
    def init_bound(self) -> float:
        return float(np.sqrt(6.0 / (self.in_dim + self.out_dim)))

    @property
    def n_parameters(self) -> int:
        return self.in_dim * self.out_dim + (self.out_dim if self.has_bias else 0)
