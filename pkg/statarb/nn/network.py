from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np

from statarb.models.errors import (DimensionMismatchError,
                                   InvalidParameterError, StaleTraceError)
from statarb.nn.layers import LayerSpec, activate, activation_grad
from statarb.utils.checks import require_finite

TRng = Union[np.random.Generator, int, None]
TMasks = Sequence[Optional[np.ndarray]]


class Mode(str, Enum):
    TRAIN = 'train'
    EVAL = 'eval'


def as_generator(rng: TRng) -> Optional[np.random.Generator]:
    if rng is None or isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(int(rng))


@dataclass
class Trace:
    inputs: List[np.ndarray] = field(repr=False)
    pre: List[np.ndarray] = field(repr=False)
    post: List[np.ndarray] = field(repr=False)
    masks: List[Optional[np.ndarray]] = field(repr=False)
    version: int
    squeezed: bool = field(default=False)

    @property
    def batch_output(self) -> np.ndarray:
        mask = self.masks[-1]
        return self.post[-1] if mask is None else self.post[-1] * mask

    @property
    def output(self) -> np.ndarray:
        output = self.batch_output
        return output[0] if self.squeezed else output


@dataclass
class Gradients:
    params: List[np.ndarray] = field(repr=False)
    inputs: np.ndarray = field(repr=False)


class Network:
    """Dense feed-forward chain. Rows of a batch are samples: y = f(x @ W.T + b)."""

    def __init__(self, layers: Sequence[LayerSpec], parameters: Sequence[np.ndarray]) -> None:
        self.layers = tuple(layers)
        if len(self.layers) == 0:
            raise InvalidParameterError('a network needs at least one layer')
        for previous, layer in zip(self.layers, self.layers[1:]):
            if previous.out_dim != layer.in_dim:
                raise DimensionMismatchError(f'layer dims do not chain: {previous.out_dim} -> {layer.in_dim}')
        self.weights: List[np.ndarray] = []
        self.biases: List[Optional[np.ndarray]] = []
        self.mode = Mode.TRAIN
        self._version = 0
        self._assign(parameters)

    @classmethod
    def init(cls, layers: Sequence[LayerSpec], rng: TRng = 0) -> 'Network':
        """Uniform in +-sqrt(6 / (in + out)) for weights, zero biases."""
        generator = as_generator(rng)
        assert generator is not None
        parameters = []
        for layer in layers:
            bound = layer.init_bound
            parameters.append(generator.uniform(-bound, bound, (layer.out_dim, layer.in_dim)))
            if layer.has_bias:
                parameters.append(np.zeros(layer.out_dim))
        return cls(layers, parameters)

    def _assign(self, parameters: Sequence[np.ndarray]) -> None:
        parameters = list(parameters)
        expected = sum(2 if layer.has_bias else 1 for layer in self.layers)
        if len(parameters) != expected:
            raise DimensionMismatchError(f'expected {expected} parameter arrays, got {len(parameters)}')
        weights, biases = [], []
        position = 0
        for layer in self.layers:
            weight = np.array(parameters[position], dtype=float)
            position += 1
            if weight.shape != (layer.out_dim, layer.in_dim):
                raise DimensionMismatchError(f'weight shape {weight.shape} != {(layer.out_dim, layer.in_dim)}')
            weights.append(require_finite(weight, 'weight'))
            bias = None
            if layer.has_bias:
                bias = np.array(parameters[position], dtype=float)
                position += 1
                if bias.shape != (layer.out_dim,):
                    raise DimensionMismatchError(f'bias shape {bias.shape} != {(layer.out_dim,)}')
                bias = require_finite(bias, 'bias')
            biases.append(bias)
        self.weights, self.biases = weights, biases
        self.touch()

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def parameters(self) -> List[np.ndarray]:
        parameters: List[np.ndarray] = []
        for weight, bias in zip(self.weights, self.biases):
            parameters.append(weight)
            if bias is not None:
                parameters.append(bias)
        return parameters

    @property
    def n_parameters(self) -> int:
        return sum(layer.n_parameters for layer in self.layers)

    @property
    def has_dropout(self) -> bool:
        return any(layer.dropout > 0 for layer in self.layers)

    @property
    def version(self) -> int:
        return self._version

    def touch(self) -> None:
        self._version += 1

    def set_parameters(self, parameters: Sequence[np.ndarray]) -> None:
        self._assign(parameters)

    def copy(self) -> 'Network':
        other = Network(self.layers, self.parameters)
        other.mode = self.mode
        return other

    def train(self) -> 'Network':
        self.mode = Mode.TRAIN
        return self

    def eval(self) -> 'Network':
        self.mode = Mode.EVAL
        return self

    def draw_masks(self, n_rows: int, rng: TRng) -> List[Optional[np.ndarray]]:
        generator = as_generator(rng)
        masks: List[Optional[np.ndarray]] = []
        for layer in self.layers:
            if layer.dropout <= 0:
                masks.append(None)
                continue
            if generator is None:
                raise InvalidParameterError('dropout in train mode needs an rng or frozen masks')
            keep = generator.random((n_rows, layer.out_dim)) >= layer.dropout
            masks.append(keep / (1.0 - layer.dropout))
        return masks

    def _batch(self, x: np.ndarray) -> np.ndarray:
        batch = np.asarray(x, dtype=float)
        batch = batch[None, :] if batch.ndim == 1 else batch
        if batch.ndim != 2 or batch.shape[1] != self.in_dim:
            raise DimensionMismatchError(f'input shape {np.shape(x)} does not match input dim {self.in_dim}')
        return require_finite(batch, 'network input')

    def _run(self, x: np.ndarray, depth: int, masks: Optional[TMasks]) -> Trace:
        squeezed = np.ndim(x) == 1
        h = self._batch(x)
        inputs, pres, posts, used = [], [], [], []
        for index in range(depth):
            layer, weight, bias = self.layers[index], self.weights[index], self.biases[index]
            inputs.append(h)
            pre = h @ weight.T
            if bias is not None:
                pre = pre + bias
            post = activate(layer.activation, pre)
            mask = None if masks is None else masks[index]
            if mask is not None and mask.shape != post.shape:
                raise DimensionMismatchError(f'dropout mask shape {mask.shape} != {post.shape}')
            pres.append(pre)
            posts.append(post)
            used.append(mask)
            h = post if mask is None else post * mask
        return Trace(inputs, pres, posts, used, self._version, squeezed)

    def forward(self, x: np.ndarray, rng: TRng = None, masks: Optional[TMasks] = None) -> Trace:
        """Train mode draws inverted-dropout masks (or uses frozen `masks`); eval mode is the plain pass."""
        if self.mode == Mode.EVAL:
            return self._run(x, len(self.layers), None)
        if masks is not None:
            if len(masks) != len(self.layers):
                raise DimensionMismatchError(f'expected {len(self.layers)} masks, got {len(masks)}')
            return self._run(x, len(self.layers), masks)
        n_rows = 1 if np.ndim(x) == 1 else int(np.shape(x)[0])
        return self._run(x, len(self.layers), self.draw_masks(n_rows, rng))

    def predict_trace(self, x: np.ndarray, depth: Optional[int] = None) -> Trace:
        return self._run(x, len(self.layers) if depth is None else depth, None)

    def predict(self, x: np.ndarray, depth: Optional[int] = None) -> np.ndarray:
        """Deterministic pass through the first `depth` layers (all by default), ignoring the mode."""
        return self.predict_trace(x, depth).output

    def backward(self, trace: Trace, grad_output: np.ndarray) -> Gradients:
        if trace.version != self._version:
            raise StaleTraceError(f'trace of version {trace.version} used after parameters changed '
                                  f'(now {self._version})')
        if len(trace.post) != len(self.layers):
            raise DimensionMismatchError('backward needs a trace over all layers')
        grad = np.asarray(grad_output, dtype=float)
        grad = grad[None, :] if trace.squeezed and grad.ndim == 1 else grad
        if grad.shape != trace.post[-1].shape:
            raise DimensionMismatchError(f'upstream gradient shape {grad.shape} != {trace.post[-1].shape}')
        grads: List[np.ndarray] = []
        for index in reversed(range(len(self.layers))):
            layer = self.layers[index]
            mask = trace.masks[index]
            if mask is not None:
                grad = grad * mask
            grad_pre = grad * activation_grad(layer.activation, trace.pre[index], trace.post[index])
            if layer.has_bias:
                grads.append(grad_pre.sum(axis=0))
            grads.append(grad_pre.T @ trace.inputs[index])
            grad = grad_pre @ self.weights[index]
        grads.reverse()
        inputs = grad[0] if trace.squeezed else grad
        return Gradients(grads, inputs)
