import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from statarb.factors.base import FIT_WINDOW, ResidualRecorder, modelable_columns
from statarb.factors.ols import ols_fit
from statarb.market_data.standardize import (CAP, WINDOW, StandardizedWindow,
                                             standardize_window,
                                             volatility_scale_window)
from statarb.models.errors import (DegenerateSeriesError,
                                   InsufficientStocksError,
                                   InvalidParameterError)
from statarb.models.panel import ReturnsPanel, TDate, UniverseMask
from statarb.models.results import ResidualPanel
from statarb.nn.layers import Activation, LayerSpec
from statarb.nn.network import Network
from statarb.nn.train import train_network
from statarb.utils.parallel import ordered_map
from statarb.utils.seeds import derive_seed

log = logging.getLogger(__name__)

LATENT = 20
DROPOUT = 0.25
DEEP_WIDTHS = (64, 32)
OPTIONS = (1, 2, 3)


@dataclass(frozen=True)
class AEVariant:
    id: int
    activation: Activation
    has_bias: bool
    dropout: float
    encoder_layers: int


AE_VARIANTS: Dict[int, AEVariant] = {
    0: AEVariant(0, Activation.TANH, True, DROPOUT, 1),
    1: AEVariant(1, Activation.TANH, True, DROPOUT, 3),
    2: AEVariant(2, Activation.TANH, True, 0.0, 1),
    3: AEVariant(3, Activation.TANH, False, 0.0, 1),
    4: AEVariant(4, Activation.TANH, False, 0.0, 3),
    5: AEVariant(5, Activation.RELU, True, DROPOUT, 1),
    6: AEVariant(6, Activation.RELU, True, DROPOUT, 3),
    7: AEVariant(7, Activation.RELU, True, 0.0, 1),
    8: AEVariant(8, Activation.RELU, False, 0.0, 1),
    9: AEVariant(9, Activation.RELU, False, 0.0, 3),
}


def get_variant(variant: int) -> AEVariant:
    if variant not in AE_VARIANTS:
        raise InvalidParameterError(f'autoencoder variant must be 0..9, got {variant}')
    return AE_VARIANTS[variant]


def autoencoder_layers(n: int, variant: int, latent: int = LATENT) -> List[LayerSpec]:
    """Encoder n -> latent (or n -> 64 -> 32 -> latent) per variant, then a tanh decoder back to n."""
    spec = get_variant(variant)
    widths = [n, latent] if spec.encoder_layers == 1 else [n, *DEEP_WIDTHS, latent]
    layers = [LayerSpec(a, b, spec.activation, spec.has_bias, spec.dropout)
              for a, b in zip(widths, widths[1:])]
    layers.append(LayerSpec(latent, n, Activation.TANH, spec.has_bias))
    return layers


def init_autoencoder(n: int, variant: int, latent: int, rng: np.random.Generator) -> Network:
    """Draws the autoencoder weights from `rng`; the factor models and the policy net both start here."""
    return Network.init(autoencoder_layers(n, variant, latent), rng)


def encoder_depth(net: Network) -> int:
    return len(net.layers) - 1


@dataclass(frozen=True)
class AETraining:
    latent: int = LATENT
    epochs: int = 10
    lr: float = 1e-3
    batch_size: Optional[int] = 32


def train_autoencoder(z: np.ndarray, variant: int, seed: int,
                      training: AETraining = AETraining()) -> Tuple[Network, List[float]]:
    """Initializes from default_rng(seed) and trains on the rows of `z`; shuffling and dropout use a child seed."""
    z = np.asarray(z, dtype=float)
    if z.shape[1] < training.latent:
        raise InsufficientStocksError(f'{z.shape[1]} stocks for a latent width of {training.latent}')
    net = init_autoencoder(z.shape[1], variant, training.latent, np.random.default_rng(seed))
    rng = np.random.default_rng(derive_seed(seed, 'train'))
    losses = train_network(net, z, z, training.epochs, training.lr, training.batch_size, rng)
    return net, losses


@dataclass
class AEDayModel:
    """Autoencoder trained on the window ending at `row`, ready to produce residuals for row + 1."""
    row: int
    variant: int
    option: int
    net: Network = field(repr=False)
    window: StandardizedWindow = field(repr=False)
    losses: List[float] = field(default_factory=list, repr=False)

    @property
    def columns(self) -> np.ndarray:
        return self.window.columns

    def encode(self, x: np.ndarray) -> np.ndarray:
        return self.net.predict(x, encoder_depth(self.net))

    def residuals(self, panel: ReturnsPanel, fit_window: int = FIT_WINDOW) -> np.ndarray:
        row = self.row + 1
        columns = self.columns
        if self.option == 1:
            z = self.window.transform(panel.returns[row, columns])
            return z - self.net.predict(z)
        start = row - fit_window
        if self.option == 2:
            inputs = self.window.z[-fit_window:]
            today = self.window.transform(panel.returns[row, columns])
        else:
            scaled = volatility_scale_window(panel, row, fit_window + 1, WINDOW, columns)
            if len(scaled.columns) != len(columns):
                raise DegenerateSeriesError('trailing volatility vanished for some modeled stocks')
            inputs, today = scaled.s[:-1], scaled.s[-1]
        fit = ols_fit(self.encode(inputs), panel.returns[start:row, columns], intercept=False)
        return panel.returns[row, columns] - self.encode(today) @ fit.beta


def fit_autoencoder_day(panel: ReturnsPanel, t: TDate, variant: int, option: int, seed: int,
                        training: AETraining = AETraining(), columns: Optional[np.ndarray] = None,
                        window: int = WINDOW) -> AEDayModel:
    if option not in OPTIONS:
        raise InvalidParameterError(f'residual option must be 1, 2 or 3, got {option}')
    row = panel.row(t)
    standardized = standardize_window(panel, row, window, CAP, columns, drop_degenerate=True)
    net, losses = train_autoencoder(standardized.z, variant, seed, training)
    return AEDayModel(row, variant, option, net, standardized, losses)


@dataclass
class AutoencoderModel:
    variant: int
    option: int
    seed: int = field(default=0)
    training: AETraining = field(default_factory=AETraining)
    window: int = field(default=WINDOW)
    fit_window: int = field(default=FIT_WINDOW)
    workers: int = field(default=1)
    name: str = field(default='AE')

    def __post_init__(self):
        get_variant(self.variant)
        if self.option not in OPTIONS:
            raise InvalidParameterError(f'residual option must be 1, 2 or 3, got {self.option}')

    @property
    def label(self) -> str:
        return f'variant {self.variant} option {self.option}'

    @property
    def first_row(self) -> int:
        return self.window + (self.fit_window if self.option == 3 else 0)

    def day_seed(self, row: int) -> int:
        return derive_seed(self.seed, 'ae', self.variant, self.option, row)

    def _day(self, panel: ReturnsPanel, universe: UniverseMask, row: int):
        columns = modelable_columns(panel, universe, row, self.first_row)
        if len(columns) < self.training.latent:
            return row, None, None, f'{len(columns)} stocks for a latent width of {self.training.latent}'
        try:
            model = fit_autoencoder_day(panel, row - 1, self.variant, self.option, self.day_seed(row),
                                        self.training, columns, self.window)
            return row, model.columns, model.residuals(panel, self.fit_window), None
        except (InsufficientStocksError, DegenerateSeriesError) as exc:
            return row, None, None, str(exc)

    def residuals(self, panel: ReturnsPanel, universe: Optional[UniverseMask] = None,
                  rows: Optional[range] = None) -> ResidualPanel:
        universe = UniverseMask.everyone(panel) if universe is None else universe
        rows = range(self.first_row, panel.n_days) if rows is None else rows
        recorder = ResidualRecorder(panel, self.name, self.label)
        days = [row for row in rows if row >= self.first_row]
        log.info('Fitting %d daily autoencoders (%s) on %d workers', len(days), self.label, self.workers)
        for row, columns, residuals, reason in ordered_map(lambda row: self._day(panel, universe, row),
                                                            days, self.workers):
            if reason is not None:
                recorder.skip(row, reason)
                continue
            recorder.record(row, columns, residuals)
        return recorder.build()


def autoencoder_residuals(panel: ReturnsPanel, variant: int, option: int, seed: int = 0,
                          universe: Optional[UniverseMask] = None, training: AETraining = AETraining(),
                          rows: Optional[range] = None, workers: int = 1) -> ResidualPanel:
    return AutoencoderModel(variant, option, seed, training, workers=workers).residuals(panel, universe, rows)
