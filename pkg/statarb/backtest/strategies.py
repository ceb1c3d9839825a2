import logging
from dataclasses import dataclass, field
from typing import Optional

from statarb.factors.autoencoder import LATENT, AETraining, AutoencoderModel
from statarb.factors.exogenous import ExogenousModel
from statarb.factors.pca import PCAModel
from statarb.models.config import PolicyConfig, StrategySpec
from statarb.models.errors import ConfigError
from statarb.models.model import IResidualModel, IStrategy, StrategySignals
from statarb.models.panel import FactorReturns, ReturnsPanel, UniverseMask
from statarb.policy.train import policy_signals
from statarb.signals.ffn import BATCH, EPOCHS, TRAIN_DAYS, ffn_signals
from statarb.signals.ou import OU_WINDOW, ou_signals
from statarb.utils.seeds import derive_seed

log = logging.getLogger(__name__)


@dataclass
class ResidualStrategy:
    """Residual model followed by OU threshold signals."""
    spec: StrategySpec
    model: IResidualModel = field(repr=False)

    @property
    def ou_first_row(self) -> int:
        return self.model.first_row + OU_WINDOW - 1

    @property
    def warmup(self) -> int:
        return self.ou_first_row

    def _ou(self, panel: ReturnsPanel, universe: UniverseMask, first: int, rows: range):
        residual_rows = range(max(self.model.first_row, first - OU_WINDOW + 1), rows.stop)
        residuals = self.model.residuals(panel, universe, residual_rows)
        return residuals, ou_signals(residuals, range(first, rows.stop), universe)

    def signals(self, panel: ReturnsPanel, universe: UniverseMask, rows: range) -> StrategySignals:
        residuals, ou = self._ou(panel, universe, rows.start, rows)
        return StrategySignals(rows, ou.signals.values, residuals, ou.signals)


@dataclass
class FFNStrategy(ResidualStrategy):
    """Residual model, OU parameter features, then the walk-forward feed-forward network."""
    seed: int = field(default=0)
    epochs: int = field(default=EPOCHS)
    lr: float = field(default=1e-3)
    batch_size: int = field(default=BATCH)
    train_days: int = field(default=TRAIN_DAYS)

    @property
    def warmup(self) -> int:
        return self.ou_first_row + self.train_days

    def signals(self, panel: ReturnsPanel, universe: UniverseMask, rows: range) -> StrategySignals:
        residuals, ou = self._ou(panel, universe, self.ou_first_row, rows)
        ffn = ffn_signals(ou, panel.returns, rows, self.ou_first_row, self.seed, self.train_days,
                          epochs=self.epochs, lr=self.lr, batch_size=self.batch_size)
        return StrategySignals(rows, ffn.signals.values, residuals, ffn.signals, ffn.diagnostics, ffn.networks)


@dataclass
class PolicyStrategy:
    spec: StrategySpec
    config: PolicyConfig
    workers: int = field(default=1)

    @property
    def warmup(self) -> int:
        return self.config.window - 1

    def signals(self, panel: ReturnsPanel, universe: UniverseMask, rows: range) -> StrategySignals:
        policy = policy_signals(panel, self.config, rows, universe, self.workers)
        return StrategySignals(rows, policy.phi, diagnostics=policy.diagnostics)


def strategy_seed(spec: StrategySpec, seed: int) -> int:
    return derive_seed(seed, spec.model, spec.variant_name)


def _residual_model(spec: StrategySpec, factor_returns: Optional[FactorReturns], seed: int,
                    workers: int) -> IResidualModel:
    if spec.family == 'ff':
        if factor_returns is None:
            raise ConfigError([f'strategy {spec.label}: {spec.model} needs a factor-return file (data.factors)'])
        return ExogenousModel(factor_returns.select(spec.factors))
    if spec.family == 'pca':
        assert spec.k is not None
        return PCAModel(spec.k)
    assert spec.variant is not None and spec.option is not None
    training = AETraining(spec.latent_dim or LATENT, spec.epochs or AETraining.epochs, spec.lr,
                          spec.batch_size or AETraining.batch_size)
    return AutoencoderModel(spec.variant, spec.option, seed, training, workers=workers)


def build_strategy(spec: StrategySpec, factor_returns: Optional[FactorReturns] = None, seed: int = 0,
                   workers: int = 1) -> IStrategy:
    violations = spec.violations()
    if violations:
        raise ConfigError(violations)
    seed = strategy_seed(spec, seed)
    if spec.family == 'policy':
        return PolicyStrategy(spec, spec.policy_config(seed), workers)
    model = _residual_model(spec, factor_returns, seed, workers)
    if spec.uses_ffn:
        return FFNStrategy(spec, model, seed, spec.epochs or EPOCHS, spec.lr, spec.batch_size or BATCH)
    return ResidualStrategy(spec, model)
