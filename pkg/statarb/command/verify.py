import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Tuple

import numpy as np

from statarb.backtest.strategies import FFNStrategy, build_strategy
from statarb.backtest.walk_forward import decision_rows, run_walk_forward
from statarb.factors.autoencoder import AE_VARIANTS, init_autoencoder
from statarb.factors.exogenous import ExogenousModel
from statarb.factors.pca import decompose_correlation
from statarb.market_data.synthetic import ou_paths
from statarb.models.config import StrategySpec
from statarb.models.model import IStrategy
from statarb.models.panel import (FactorReturns, ReturnsPanel, SyntheticSpec,
                                  UniverseMask)
from statarb.models.results import TRADING_DAYS, BacktestResult, OUParams
from statarb.nn.gradcheck import (finite_difference_check, gradient_check,
                                  nudge_off_kink)
from statarb.nn.layers import Activation
from statarb.nn.losses import mse_loss
from statarb.nn.network import Network
from statarb.policy.network import build_policy_net, policy_loss
from statarb.report.table import TableCreator
from statarb.service import synthetic_market
from statarb.signals.ffn import ffn_batch_loss, ffn_layers
from statarb.signals.ou import estimate_ou

log = logging.getLogger(__name__)

SUITES = ('gradients', 'pca', 'ou', 'invariants')

GRADIENT_TOLERANCE = 1e-4
EIGEN_TOLERANCE = 1e-8
TRACE_TOLERANCE = 1e-6
CLOSED_FORM_TOLERANCE = 1e-12
RECOVERY_TOLERANCE = 0.10
IDENTITY_TOLERANCE = 1e-10
MEAN_TOLERANCE = 0.05
LEVERAGE_TOLERANCE = 1e-9
OU_STEPS = 10_000
OU_PATHS = 25
OU_KAPPA = 5.0
OU_SIGMA_EQ = 0.02


class Command(Protocol):

    def execute(self) -> 'VerifyReport':
        ...


@dataclass
class Check:
    name: str
    observed: float
    tolerance: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, observed: float, tolerance: float) -> 'Check':
        return cls(name, observed, tolerance, bool(observed <= tolerance))


@dataclass
class VerifyReport:
    suite: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return len(self.checks) > 0 and all(check.passed for check in self.checks)

    def add(self, check: Check) -> None:
        log.debug('%s: %s observed %.3g, tolerance %.3g', self.suite, check.name, check.observed, check.tolerance)
        self.checks.append(check)

    def render(self) -> str:
        rows = [[check.name, check.observed, check.tolerance, 'pass' if check.passed else 'FAIL']
                for check in self.checks]
        table = TableCreator(['check', 'observed', 'tolerance', 'status'], rows).render()
        return f'{self.suite}: {"passed" if self.passed else "FAILED"}\n{table}'


class VerifyGradients(Command):
    """Central differences against backward for every network the strategies train."""

    def __init__(self, seed: int = 0, tolerance: float = GRADIENT_TOLERANCE) -> None:
        super().__init__()
        self.seed = seed
        self.tolerance = tolerance

    def _autoencoder(self, variant: int) -> float:
        rng = np.random.default_rng(self.seed + variant)
        net = init_autoencoder(8, variant, 3, rng)
        x = rng.normal(0.0, 1.0, (16, 8))
        if AE_VARIANTS[variant].activation == Activation.RELU:
            x = nudge_off_kink(net, x, rng=rng)
        return finite_difference_check(net, x, lambda out: mse_loss(x, out))

    def _ffn(self) -> float:
        rng = np.random.default_rng(self.seed)
        net = Network.init(ffn_layers(), rng)
        features = nudge_off_kink(net, rng.normal(0.0, 1.0, (32, 5)), rng=rng)
        next_returns = rng.normal(0.0, 0.02, len(features))
        days = np.arange(len(features)) // 8
        masks = net.draw_masks(len(features), rng)
        analytic = ffn_batch_loss(net, features, next_returns, days, masks=masks).grads
        error = gradient_check(net.parameters, analytic,
                               lambda: ffn_batch_loss(net, features, next_returns, days, masks=masks).loss)
        net.touch()
        return error

    def _policy(self, gearing: float) -> float:
        rng = np.random.default_rng(self.seed)
        net = build_policy_net(4, 2, rng)
        z = nudge_off_kink(net.autoencoder, rng.normal(0.0, 1.0, (30, 4)), rng=rng)
        next_returns = rng.normal(0.0, 0.02, z.shape)
        analytic = policy_loss(net, z, next_returns, gearing).grads
        error = gradient_check(net.parameters, analytic, lambda: policy_loss(net, z, next_returns, gearing).loss)
        net.touch()
        return error

    def execute(self) -> VerifyReport:
        report = VerifyReport('gradients')
        for variant in AE_VARIANTS:
            report.add(Check.at_most(f'autoencoder variant {variant}', self._autoencoder(variant), self.tolerance))
        report.add(Check.at_most('OU feed-forward net', self._ffn(), self.tolerance))
        for gearing in (0.0, 0.5, 1.0):
            report.add(Check.at_most(f'policy net lambda={gearing}', self._policy(gearing), self.tolerance))
        return report


def standardized_sample(rng: np.random.Generator, days: int, stocks: int) -> np.ndarray:
    raw = rng.normal(0.0, 1.0, (days, stocks)) @ rng.normal(0.0, 1.0, (stocks, stocks))
    return (raw - raw.mean(axis=0)) / raw.std(axis=0, ddof=1)


class VerifyPca(Command):
    """Eigen self-consistency of the correlation decomposition on random standardized windows."""

    def __init__(self, seeds: int = 50, days: int = 252, stocks: int = 20) -> None:
        super().__init__()
        self.seeds = seeds
        self.days = days
        self.stocks = stocks

    def _random_windows(self) -> Tuple[float, float, float]:
        residual, orthogonality, trace = 0.0, 0.0, 0.0
        for seed in range(self.seeds):
            z = standardized_sample(np.random.default_rng(seed), self.days, self.stocks)
            correlation = z.T @ z / (self.days - 1)
            values, vectors, spectrum = decompose_correlation(correlation, self.stocks)
            residual = max(residual, float(np.max(np.abs(correlation @ vectors - vectors * values))))
            orthogonality = max(orthogonality, float(np.max(np.abs(vectors.T @ vectors - np.eye(self.stocks)))))
            trace = max(trace, abs(float(spectrum.sum()) - self.stocks))
        return residual, orthogonality, trace

    @staticmethod
    def _closed_form() -> float:
        error = 0.0
        for rho in (-0.9, -0.3, 0.0, 0.4, 0.8):
            values, _, _ = decompose_correlation(np.array([[1.0, rho], [rho, 1.0]]), 2)
            expected = np.sort([1.0 + rho, 1.0 - rho])[::-1]
            error = max(error, float(np.max(np.abs(values - expected))))
        return error

    def execute(self) -> VerifyReport:
        report = VerifyReport('pca')
        residual, orthogonality, trace = self._random_windows()
        report.add(Check.at_most('max |Cv - lambda v|', residual, EIGEN_TOLERANCE))
        report.add(Check.at_most('max |V^T V - I|', orthogonality, EIGEN_TOLERANCE))
        report.add(Check.at_most('max |sum(lambda) - N|', trace, TRACE_TOLERANCE))
        report.add(Check.at_most('2x2 eigenvalues vs 1 +/- rho', self._closed_form(), CLOSED_FORM_TOLERANCE))
        return report


def identity_error(params: OUParams) -> float:
    """Largest relative disagreement among the derived OU quantities of one fit."""
    errors = [
        abs(params.b - math.exp(-params.k / TRADING_DAYS)) / abs(params.b),
        abs(params.a - params.m * (1.0 - params.b)) / max(abs(params.a), 1e-300),
        abs(params.var_zeta - params.sigma_eq ** 2 * (1.0 - params.b ** 2)) / params.var_zeta,
        abs(params.sigma_eq - params.sigma / math.sqrt(2.0 * params.k)) / params.sigma_eq,
    ]
    return max(errors)


class VerifyOu(Command):
    """Recovers the parameters of exactly discretized OU paths."""

    def __init__(self, steps: int = OU_STEPS, paths: int = OU_PATHS, seed: int = 0,
                 kappa: float = OU_KAPPA, sigma_eq: float = OU_SIGMA_EQ) -> None:
        super().__init__()
        self.steps = steps
        self.paths = paths
        self.seed = seed
        self.kappa = kappa
        self.sigma_eq = sigma_eq

    def _simulate(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        kappa = np.full(self.paths, self.kappa)
        sigma = np.full(self.paths, self.sigma_eq * math.sqrt(2.0 * self.kappa))
        start = self.sigma_eq * rng.standard_normal(self.paths)
        return ou_paths(kappa, np.zeros(self.paths), sigma, self.steps, rng, start)

    def execute(self) -> VerifyReport:
        report = VerifyReport('ou')
        paths = self._simulate()
        fits = []
        for column in range(self.paths):
            # the leading level makes the cumulated block reproduce the path itself
            block = np.concatenate([paths[:1, column], np.diff(paths[:, column])])
            fits.append(estimate_ou(block))
        usable = [fit for fit in fits if fit.mean_reverting]
        if len(usable) < len(fits):
            log.warning('%d of %d OU paths did not mean-revert', len(fits) - len(usable), len(fits))
        report.add(Check.at_most('paths without mean reversion', float(len(fits) - len(usable)), 0.0))
        if not usable:
            return report
        k = float(np.median([fit.k for fit in usable]))
        sigma_eq = float(np.median([fit.sigma_eq for fit in usable]))
        m = float(np.median([fit.m for fit in usable]))
        report.add(Check.at_most(f'median k vs {self.kappa}', abs(k - self.kappa) / self.kappa, RECOVERY_TOLERANCE))
        report.add(Check.at_most(f'median sigma_eq vs {self.sigma_eq}', abs(sigma_eq - self.sigma_eq) / self.sigma_eq,
                                 RECOVERY_TOLERANCE))
        report.add(Check.at_most('median |m| / sigma_eq', abs(m) / self.sigma_eq, MEAN_TOLERANCE))
        report.add(Check.at_most('identities among a, b, var_zeta, k, m, sigma_eq, sigma',
                                 max(identity_error(fit) for fit in usable), IDENTITY_TOLERANCE))
        return report


def invariant_panel(seed: int = 0) -> Tuple[ReturnsPanel, FactorReturns]:
    panel, factors, _ = synthetic_market(SyntheticSpec(n_stocks=10, n_days=420, n_factors=2, seed=seed))
    return panel, factors


def invariant_strategies(factors: FactorReturns, seed: int = 0) -> List[IStrategy]:
    """One small instance of every strategy family."""
    specs = [
        StrategySpec('FF-OU'),
        StrategySpec('PCA-OU', k=2),
        StrategySpec('AE-OU', variant=2, option=1, latent_dim=3, epochs=2),
        StrategySpec('AE-Policy', latent_dim=3, epochs=2),
    ]
    strategies = [build_strategy(spec, factors, seed) for spec in specs]
    ffn = StrategySpec('FF-OU+FFN', epochs=1)
    strategies.append(FFNStrategy(ffn, ExogenousModel(factors), seed, epochs=1, train_days=100))
    return strategies


def perturbed_after(panel: ReturnsPanel, row: int, seed: int) -> ReturnsPanel:
    returns = np.array(panel.returns)
    rng = np.random.default_rng(seed)
    tail = returns[row + 1:]
    returns[row + 1:] = np.where(np.isnan(tail), np.nan, tail[rng.permutation(len(tail))] * 1.5)
    return panel.with_returns(returns)


class VerifyInvariants(Command):
    """Leverage, metric consistency, determinism and no-lookahead on a small synthetic backtest."""

    def __init__(self, seed: int = 0, strategies: Optional[Callable[[FactorReturns], List[IStrategy]]] = None) -> None:
        super().__init__()
        self.seed = seed
        self.strategies = strategies or (lambda factors: invariant_strategies(factors, self.seed))

    @staticmethod
    def _leverage(result: BacktestResult) -> float:
        gross = np.abs(result.weights).sum(axis=1)
        return float(np.max(np.abs(gross[result.traded] - 1.0), initial=0.0))

    @staticmethod
    def _sharpe_consistency(result: BacktestResult) -> float:
        performance = result.performance
        if performance.degenerate:
            return 0.0
        return abs(performance.sharpe - performance.mu / performance.sigma)

    def _lookahead(self, strategy: IStrategy, panel: ReturnsPanel, universe: UniverseMask,
                   result: BacktestResult) -> float:
        rows = decision_rows(strategy, panel)
        cut = rows.start + len(rows) // 2
        shifted = run_walk_forward(strategy, perturbed_after(panel, cut, self.seed), universe)
        upto = cut - rows.start + 1
        same = np.array_equal(result.weights[:upto], shifted.weights[:upto], equal_nan=True)
        return 0.0 if same else float(np.max(np.abs(result.weights[:upto] - shifted.weights[:upto])))

    def execute(self) -> VerifyReport:
        report = VerifyReport('invariants')
        panel, factors = invariant_panel(self.seed)
        universe = UniverseMask.everyone(panel)
        for strategy in self.strategies(factors):
            label = strategy.spec.label
            result = run_walk_forward(strategy, panel, universe)
            repeat = run_walk_forward(strategy, panel, universe)
            report.add(Check.at_most(f'{label}: max | |w|_1 - 1 | on traded days', self._leverage(result),
                                     LEVERAGE_TOLERANCE))
            report.add(Check.at_most(f'{label}: |SR - mu/sigma|', self._sharpe_consistency(result), 1e-12))
            identical = np.array_equal(result.returns, repeat.returns) and np.array_equal(result.weights, repeat.weights)
            report.add(Check.at_most(f'{label}: rerun differs', 0.0 if identical else 1.0, 0.0))
            report.add(Check.at_most(f'{label}: weight change after perturbing later rows',
                                     self._lookahead(strategy, panel, universe, result), 0.0))
        return report


def verify_command(suite: str, steps: Optional[int] = None, seed: int = 0) -> Command:
    commands: Dict[str, Callable[[], Command]] = {
        'gradients': lambda: VerifyGradients(seed),
        'pca': lambda: VerifyPca(),
        'ou': lambda: VerifyOu(steps or OU_STEPS, seed=seed),
        'invariants': lambda: VerifyInvariants(seed),
    }
    if suite not in commands:
        raise ValueError(f'unknown suite "{suite}", expected one of {list(SUITES)}')
    return commands[suite]()


def run_verify(suite: str, steps: Optional[int] = None, seed: int = 0) -> int:
    report = verify_command(suite, steps, seed).execute()
    print(report.render())
    return 0 if report.passed else 1
