import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from statarb.nn.layers import Activation
from statarb.nn.network import Mode, Network, TMasks

log = logging.getLogger(__name__)

TOutputLoss = Callable[[np.ndarray], Tuple[float, np.ndarray]]
STEP = 1e-5


def relative_error(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray]) -> float:
    """Largest |a - n| relative to max(|a|, |n|), floored at 1e-3 of the largest analytic entry."""
    largest = max((float(np.max(np.abs(grad))) for grad in analytic if np.size(grad)), default=0.0)
    floor = max(1e-3 * largest, 1e-8)
    error = 0.0
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        error = max(error, float(np.max(np.abs(a - n) / scale)))
    return error


def numeric_gradients(parameters: Sequence[np.ndarray], loss: Callable[[], float],
                      h: float = STEP) -> List[np.ndarray]:
    """Central differences, perturbing each entry of `parameters` in place and restoring it."""
    numeric = []
    for param in parameters:
        grad = np.zeros_like(param)
        flat, out = param.reshape(-1), grad.reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + h
            upper = loss()
            flat[index] = original - h
            lower = loss()
            flat[index] = original
            out[index] = (upper - lower) / (2.0 * h)
        numeric.append(grad)
    return numeric


def gradient_check(parameters: Sequence[np.ndarray], analytic: Sequence[np.ndarray],
                   loss: Callable[[], float], h: float = STEP) -> float:
    return relative_error(analytic, numeric_gradients(parameters, loss, h))


def finite_difference_check(net: Network, x: np.ndarray, loss_fn: TOutputLoss, h: float = STEP,
                            masks: Optional[TMasks] = None) -> float:
    """Compares backward against central differences with dropout masks held fixed."""
    if net.mode == Mode.TRAIN and masks is None and net.has_dropout:
        n_rows = 1 if np.ndim(x) == 1 else len(x)
        masks = net.draw_masks(n_rows, np.random.default_rng(0))

    def run():
        if net.mode == Mode.EVAL:
            return net.forward(x)
        return net.forward(x, masks=masks if masks is not None else [None] * len(net.layers))

    trace = run()
    _, grad_output = loss_fn(trace.output)
    analytic = net.backward(trace, grad_output).params
    error = gradient_check(net.parameters, analytic, lambda: loss_fn(run().output)[0], h)
    net.touch()
    log.debug('Gradient check over %d parameters: max relative error %.3g', net.n_parameters, error)
    return error


def _relu_margin(net: Network, x: np.ndarray) -> np.ndarray:
    trace = net.predict_trace(x)
    distance = np.full(len(x), np.inf)
    for layer, pre in zip(net.layers, trace.pre):
        if layer.activation == Activation.RELU:
            distance = np.minimum(distance, np.abs(pre).min(axis=1))
    return distance


def nudge_off_kink(net: Network, x: np.ndarray, margin: float = 1e-3, tries: int = 20,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Jitters rows whose relu pre-activations sit within `margin` of zero; drops rows that stay there."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.array(x, dtype=float, ndmin=2)
    for _ in range(tries):
        close = _relu_margin(net, x) < margin
        if not close.any():
            return x
        x[close] += rng.normal(0.0, 10 * margin, (int(close.sum()), x.shape[1]))
    keep = _relu_margin(net, x) >= margin
    log.debug('Dropping %d rows stuck on a relu kink', int((~keep).sum()))
    return x[keep]
