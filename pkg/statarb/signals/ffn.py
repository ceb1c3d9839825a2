import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from statarb.models.errors import (DegenerateVarianceError,
                                   InsufficientDataError,
                                   InsufficientHistoryError,
                                   InvalidParameterError)
from statarb.models.results import SignalPanel
from statarb.nn.adam import AdamState, adam_step
from statarb.nn.layers import Activation, LayerSpec
from statarb.nn.losses import sharpe_loss
from statarb.nn.network import Network, TMasks, TRng
from statarb.signals.ou import N_FEATURES, OUSignals
from statarb.utils.checks import require_finite
from statarb.utils.seeds import derive_seed

log = logging.getLogger(__name__)

HIDDEN = 5
DROPOUT = 0.25
TRAIN_DAYS = 1000
PREDICT_DAYS = 125
BATCH = 1000
EPOCHS = 5


def ffn_layers() -> List[LayerSpec]:
    return [LayerSpec(N_FEATURES, HIDDEN, Activation.RELU, True, DROPOUT),
            LayerSpec(HIDDEN, HIDDEN, Activation.RELU, True, DROPOUT),
            LayerSpec(HIDDEN, HIDDEN, Activation.RELU, True, DROPOUT),
            LayerSpec(HIDDEN, 1, Activation.IDENTITY, True)]


@dataclass
class FFNBatch:
    loss: float
    grads: List[np.ndarray] = field(repr=False)
    portfolio: np.ndarray = field(repr=False)


def ffn_batch_loss(net: Network, features: np.ndarray, next_returns: np.ndarray, day_ids: np.ndarray,
                   rng: TRng = None, masks: Optional[TMasks] = None) -> FFNBatch:
    """-Sharpe of the daily portfolios whose weights are the net outputs L1-normalized within each day."""
    _, days = np.unique(day_ids, return_inverse=True)
    n_days = int(days.max()) + 1 if len(days) else 0
    trace = net.forward(features, rng=rng, masks=masks)
    out = trace.output[:, 0]
    gross = np.bincount(days, np.abs(out), minlength=n_days)
    safe = np.where(gross > 0, gross, 1.0)
    weights = np.where(gross[days] > 0, out / safe[days], 0.0)
    portfolio = np.bincount(days, weights * next_returns, minlength=n_days)
    loss, grad_portfolio = sharpe_loss(portfolio)
    grad_weights = grad_portfolio[days] * next_returns
    inner = np.bincount(days, grad_weights * weights, minlength=n_days)
    grad_out = (grad_weights - np.sign(out) * inner[days]) / safe[days]
    grad_out = np.where(gross[days] > 0, grad_out, 0.0)
    return FFNBatch(loss, net.backward(trace, grad_out[:, None]).params, portfolio)


def _samples(features: np.ndarray, next_returns: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Day-major flattening of the usable (day, stock) pairs."""
    usable = np.isfinite(features).all(axis=-1) & np.isfinite(next_returns)
    days, stocks = np.nonzero(usable)
    return features[days, stocks], next_returns[days, stocks], days


def day_batches(days: np.ndarray, batch_size: int) -> List[slice]:
    """Consecutive sample ranges of at most `batch_size` that never split a day; a larger day is a batch of its own."""
    edges = np.flatnonzero(np.diff(days)) + 1
    batches, start, previous = [], 0, 0
    for edge in [*edges.tolist(), len(days)]:
        if edge - start > batch_size and previous > start:
            batches.append(slice(start, previous))
            start = previous
        previous = edge
    if previous > start:
        batches.append(slice(start, previous))
    return batches


def train_ou_ffn(features: np.ndarray, next_returns: np.ndarray, seed: int, epochs: int = EPOCHS,
                 lr: float = 1e-3, batch_size: int = BATCH, min_days: int = TRAIN_DAYS,
                 net: Optional[Network] = None) -> Tuple[Network, List[Dict[str, Any]]]:
    """Trains on a D x N x 5 feature history against the D x N returns realized the following day."""
    if len(features) < min_days:
        raise InsufficientHistoryError(f'FFN training needs {min_days} days of OU parameters, got {len(features)}')
    if batch_size < 1:
        raise InvalidParameterError(f'batch size must be >= 1, got {batch_size}')
    inputs, targets, days = _samples(np.asarray(features, dtype=float), np.asarray(next_returns, dtype=float))
    net = Network.init(ffn_layers(), np.random.default_rng(seed)) if net is None else net
    rng = np.random.default_rng(derive_seed(seed, 'ffn-train'))
    state = AdamState.for_parameters(net.parameters, lr)
    net.train()
    diagnostics: List[Dict[str, Any]] = []
    networks: Dict[str, Network] = {}
    batches = day_batches(days, batch_size)
    for epoch in range(epochs):
        losses, flagged = [], 0
        for index in rng.permutation(len(batches)):
            rows = batches[index]
            try:
                batch = ffn_batch_loss(net, inputs[rows], targets[rows], days[rows], rng=rng)
            except (DegenerateVarianceError, InsufficientDataError) as exc:
                flagged += 1
                log.debug('FFN batch at sample %d flagged: %s', rows.start, exc)
                continue
            adam_step(net, batch.grads, state)
            losses.append(batch.loss)
        diagnostics.append({'epoch': epoch, 'loss': float(np.mean(losses)) if losses else None,
                            'batches': len(batches), 'flagged': flagged})
    net.eval()
    return net, diagnostics


def ffn_signal(net: Network, params: np.ndarray) -> float:
    params = require_finite(params, 'FFN inputs')
    return float(net.predict(params)[0])


@dataclass
class FFNSignals:
    signals: SignalPanel = field(repr=False)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list, repr=False)
    networks: Dict[str, Network] = field(default_factory=dict, repr=False)


def ffn_signals(ou: OUSignals, returns: np.ndarray, rows: range, first_feature_row: int, seed: int = 0,
                train_days: int = TRAIN_DAYS, predict_days: int = PREDICT_DAYS, epochs: int = EPOCHS,
                lr: float = 1e-3, batch_size: int = BATCH) -> FFNSignals:
    """Walk-forward folds: train on the `train_days` feature days before the fold, predict `predict_days`, roll.

    Feature day d is paired with the return of row d + 1, so a fold starting at t sees returns up to row t only.
    """
    features = ou.features
    first = max(rows.start, first_feature_row + train_days)
    stop = min(rows.stop, len(features))
    if first >= stop:
        raise InsufficientHistoryError(f'FFN folds need {train_days} feature days after row {first_feature_row}')
    signals = ou.signals
    phi = np.full(signals.values.shape, np.nan)
    diagnostics: List[Dict[str, Any]] = []
    networks: Dict[str, Network] = {}
    for fold_start in range(first, stop, predict_days):
        window = slice(fold_start - train_days, fold_start)
        targets = returns[fold_start - train_days + 1:fold_start + 1]
        net, fold_diagnostics = train_ou_ffn(features[window], targets, derive_seed(seed, 'ffn', fold_start),
                                             epochs, lr, batch_size, train_days)
        fold = signals.dates[fold_start].strftime('%Y-%m-%d')
        networks[fold] = net
        diagnostics.append({'fold_start': fold, 'epochs': fold_diagnostics})
        for row in range(fold_start, min(fold_start + predict_days, stop)):
            usable = np.flatnonzero(np.isfinite(features[row]).all(axis=-1))
            if len(usable):
                phi[row, usable] = net.predict(features[row, usable])[:, 0]
        log.info('FFN fold %s: predicted %d days', signals.dates[fold_start].date(),
                 min(predict_days, stop - fold_start))
    return FFNSignals(SignalPanel(signals.dates, signals.tickers, phi, None, 'ffn'), diagnostics, networks)


def flipped(net: Network) -> Network:
    """The same network with the sign of its output reversed."""
    parameters = [param.copy() for param in net.parameters]
    last = net.layers[-1]
    parameters[-1] = -parameters[-1]
    if last.has_bias:
        parameters[-2] = -parameters[-2]
    return Network(net.layers, parameters).eval()
