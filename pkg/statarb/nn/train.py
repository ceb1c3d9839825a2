import logging
from typing import Iterator, List, Optional

import numpy as np

from statarb.models.errors import DimensionMismatchError, InvalidParameterError
from statarb.nn.adam import LEARNING_RATE, AdamState, adam_step
from statarb.nn.losses import mse_loss
from statarb.nn.network import Network, TRng, as_generator

log = logging.getLogger(__name__)


def minibatches(n_rows: int, batch_size: Optional[int],
                rng: Optional[np.random.Generator]) -> Iterator[np.ndarray]:
    """Row indices per batch; shuffled unless a single batch covers every row."""
    if batch_size is None or batch_size >= n_rows:
        yield np.arange(n_rows)
        return
    if batch_size < 1:
        raise InvalidParameterError(f'batch size must be >= 1, got {batch_size}')
    order = np.arange(n_rows) if rng is None else rng.permutation(n_rows)
    for start in range(0, n_rows, batch_size):
        yield order[start:start + batch_size]


def train_network(net: Network, inputs: np.ndarray, targets: np.ndarray, epochs: int,
                  lr: float = LEARNING_RATE, batch_size: Optional[int] = 32, rng: TRng = None,
                  state: Optional[AdamState] = None) -> List[float]:
    """Minibatch MSE training with Adam; returns the mean loss of every epoch and leaves `net` in eval mode."""
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(inputs) != len(targets):
        raise DimensionMismatchError(f'{len(inputs)} inputs for {len(targets)} targets')
    if epochs < 0:
        raise InvalidParameterError(f'epochs must be >= 0, got {epochs}')
    generator = as_generator(rng)
    state = AdamState.for_parameters(net.parameters, lr) if state is None else state
    net.train()
    losses = []
    for epoch in range(epochs):
        total = 0.0
        for rows in minibatches(len(inputs), batch_size, generator):
            trace = net.forward(inputs[rows], rng=generator)
            loss, grad = mse_loss(targets[rows], trace.output)
            adam_step(net, net.backward(trace, grad).params, state)
            total += loss * len(rows)
        losses.append(total / max(len(inputs), 1))
        log.debug('epoch %d: loss %.6g', epoch, losses[-1])
    net.eval()
    return losses
