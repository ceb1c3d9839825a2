import math
from dataclasses import dataclass, field

import numpy as np
import pytest

from statarb.backtest.metrics import (date_permuted_returns,
                                      date_permuted_sharpe, max_drawdown,
                                      performance_metrics, sharpe_ratio,
                                      stationary_bootstrap_pvalue)
from statarb.backtest.strategies import (FFNStrategy, PolicyStrategy,
                                         ResidualStrategy, build_strategy,
                                         strategy_seed)
from statarb.backtest.walk_forward import decision_rows, run_walk_forward
from statarb.backtest.weights import (normalize_weights, portfolio_return,
                                      portfolio_returns)
from statarb.backtest.writer import METRIC_COLUMNS, ResultsWriter, metrics_frame
from statarb.market_data.synthetic import generate_synthetic_panel
from statarb.models.config import StrategySpec
from statarb.models.errors import (ConfigError, DimensionMismatchError,
                                   InsufficientDataError, WarmupShortfallError)
from statarb.models.model import StrategySignals
from statarb.models.panel import SyntheticSpec
from statarb.nn.checkpoint import load_network
from statarb.nn.network import Network
from statarb.signals.ffn import ffn_layers
from tests.conftest import make_panel


@dataclass
class ReversalStrategy:
    """Bets against yesterday's move; enough to exercise the walk-forward plumbing."""
    spec: StrategySpec = field(default_factory=lambda: StrategySpec('PCA-OU', label='reversal', k=1))
    warmup: int = 5

    def signals(self, panel, universe, rows):
        phi = np.full(panel.returns.shape, np.nan)
        for row in rows:
            phi[row] = -panel.returns[row] * universe.eligible_at(row)
        return StrategySignals(rows, phi)


def series_with(mu, sigma, days=500, seed=0):
    z = np.random.default_rng(seed).normal(size=days)
    z = (z - z.mean()) / z.std(ddof=1)
    return mu / 252 + sigma / math.sqrt(252) * z


class TestWeights:

    def test_normalize(self):
        np.testing.assert_allclose(normalize_weights(np.array([2.0, -2.0])), [0.5, -0.5])
        np.testing.assert_allclose(normalize_weights(np.array([1.0, 0.0, 0.0])), [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(normalize_weights(np.zeros(3)), 0.0)

    def test_untradeable_stock_gets_no_weight(self):
        np.testing.assert_allclose(normalize_weights(np.array([[np.nan, 3.0, -1.0]])), [[0.0, 0.75, -0.25]])

    def test_portfolio_return(self):
        assert portfolio_return(np.array([0.5, -0.5]), np.array([0.02, -0.02])) == pytest.approx(0.02)
        assert portfolio_return(np.zeros(2), np.array([0.02, -0.02])) == 0.0
        assert portfolio_return(np.array([0.5, 0.5]), np.array([0.02, np.nan])) == pytest.approx(0.01)

    def test_matches_loop_oracle(self, rng):
        weights = normalize_weights(rng.normal(size=(20, 7)))
        returns = rng.normal(0, 0.02, (20, 7))
        expected = [sum(weights[t, i] * returns[t, i] for i in range(7)) for t in range(20)]
        np.testing.assert_allclose(portfolio_returns(weights, returns), expected, rtol=0, atol=1e-12)

    def test_misaligned(self):
        with pytest.raises(DimensionMismatchError):
            portfolio_return(np.ones(3), np.ones(2))


class TestMetrics:

    @pytest.mark.parametrize('mu, sigma, sharpe', [(0.0455, 0.0474, 0.96), (0.0624, 0.0346, 1.80)])
    def test_annualization(self, mu, sigma, sharpe):
        performance = performance_metrics(series_with(mu, sigma))
        assert performance.mu == pytest.approx(mu)
        assert performance.sigma == pytest.approx(sigma)
        assert round(performance.sharpe, 2) == sharpe
        assert performance.days == 500

    def test_curve_compounds(self):
        performance = performance_metrics(np.array([0.1, -0.1, 0.05]))
        np.testing.assert_allclose(performance.curve, [0.1, 1.1 * 0.9 - 1, 1.1 * 0.9 * 1.05 - 1])
        assert performance.max_drawdown == pytest.approx(0.1)

    def test_constant_returns_are_degenerate(self):
        performance = performance_metrics(np.full(10, 0.001))
        assert performance.degenerate
        assert math.isnan(performance.sharpe)
        assert performance.mu == pytest.approx(0.252)

    @pytest.mark.parametrize('scale', [0.01, 3.0])
    def test_sharpe_ignores_positive_scale(self, scale):
        returns = series_with(0.05, 0.04)
        assert sharpe_ratio(scale * returns) == pytest.approx(sharpe_ratio(returns), rel=1e-12)
        assert performance_metrics(scale * returns).sharpe == pytest.approx(performance_metrics(returns).sharpe,
                                                                            rel=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            performance_metrics(np.array([0.01]))

    def test_max_drawdown_from_initial_wealth(self):
        assert max_drawdown(np.array([-0.2, -0.1])) == pytest.approx(0.2)
        assert max_drawdown(np.array([0.1, 0.2])) == 0.0

    def test_date_permutation_keeps_weight_set(self, rng):
        weights = normalize_weights(rng.normal(size=(30, 4)))
        returns = rng.normal(0, 0.01, (30, 4))
        permuted = date_permuted_returns(weights, returns, seed=1)
        assert permuted.shape == (30,)
        assert date_permuted_sharpe(weights, returns, seed=1, permutations=5) == \
            date_permuted_sharpe(weights, returns, seed=1, permutations=5)

    def test_bootstrap(self):
        good = series_with(0.3, 0.1, days=500, seed=1)
        bad = series_with(-0.1, 0.1, days=500, seed=2)
        assert stationary_bootstrap_pvalue(good, bad, n_boot=300, seed=0) < 0.05
        assert stationary_bootstrap_pvalue(bad, good, n_boot=300, seed=0) > 0.5
        with pytest.raises(InsufficientDataError):
            stationary_bootstrap_pvalue(good[:2], bad[:2])
        with pytest.raises(DimensionMismatchError):
            stationary_bootstrap_pvalue(good, bad[:-1])


class TestWalkForward:

    def test_decision_rows(self, panel):
        rows = decision_rows(ReversalStrategy(), panel)
        assert rows == range(5, panel.n_days - 1)

    def test_date_range(self, panel):
        spec = StrategySpec('PCA-OU', label='window', k=1, start=str(panel.dates[100].date()),
                            end=str(panel.dates[200].date()))
        assert decision_rows(ReversalStrategy(spec), panel) == range(100, 201)

    def test_warmup_shortfall(self):
        panel = make_panel(np.random.default_rng(0).normal(0, 0.01, (300, 5)))
        strategy = build_strategy(StrategySpec('PCA-OU', k=2))
        with pytest.raises(WarmupShortfallError) as info:
            decision_rows(strategy, panel)
        assert info.value.needed == 314

    def test_realized_on_the_next_day(self, panel):
        result = run_walk_forward(ReversalStrategy(), panel)
        assert result.decision_dates[0] == panel.dates[5]
        assert result.realized_dates[0] == panel.dates[6]
        expected = portfolio_return(normalize_weights(-panel.returns[5]), panel.returns[6])
        assert result.returns[0] == pytest.approx(expected)
        np.testing.assert_allclose(np.abs(result.weights).sum(axis=1), 1.0, atol=1e-9)
        assert result.performance.days == panel.n_days - 6

    def test_pca_ou_is_deterministic_and_causal(self, panel):
        strategy = build_strategy(StrategySpec('PCA-OU', k=2), seed=3)
        first = run_walk_forward(strategy, panel)
        again = run_walk_forward(strategy, panel)
        np.testing.assert_array_equal(first.weights, again.weights)
        np.testing.assert_array_equal(first.returns, again.returns)
        cut = 360
        returns = np.array(panel.returns)
        returns[cut + 1:] = np.random.default_rng(0).permutation(returns[cut + 1:]) * 1.5
        perturbed = run_walk_forward(strategy, panel.with_returns(returns))
        decided = first.decision_dates <= panel.dates[cut]
        np.testing.assert_array_equal(first.weights[decided], perturbed.weights[decided])
        gross = np.abs(first.weights).sum(axis=1)
        assert np.all((np.abs(gross - 1.0) <= 1e-9) | (gross == 0.0))
        assert first.performance.sharpe == pytest.approx(first.performance.mu / first.performance.sigma)

    @pytest.mark.slow
    def test_planted_mean_reversion_is_profitable(self):
        spec = SyntheticSpec(n_stocks=20, n_days=312 + 3 * 252, n_factors=3, kappa=8.0, seed=21)
        panel, _ = generate_synthetic_panel(spec)
        result = run_walk_forward(build_strategy(StrategySpec('PCA-OU', k=3)), panel)
        assert result.performance.days == 3 * 252
        assert result.performance.sharpe > 1.0
        realized = panel.returns[panel.dates.get_indexer(result.realized_dates)]
        assert abs(date_permuted_sharpe(result.weights, realized, seed=0, permutations=50)) < 0.5


class TestStrategies:

    def test_warmups(self, factors):
        assert build_strategy(StrategySpec('FF-OU'), factors).warmup == 119
        assert build_strategy(StrategySpec('PCA-OU', k=3)).warmup == 311
        assert build_strategy(StrategySpec('AE-OU', variant=2, option=1)).warmup == 311
        assert build_strategy(StrategySpec('PCA-OU+FFN', k=3)).warmup == 1311
        assert build_strategy(StrategySpec('AE-Policy', latent_dim=3)).warmup == 251

    def test_kinds(self, factors):
        assert isinstance(build_strategy(StrategySpec('FF-OU', factors=['factor_1']), factors), ResidualStrategy)
        assert isinstance(build_strategy(StrategySpec('FF-OU+FFN'), factors), FFNStrategy)
        assert isinstance(build_strategy(StrategySpec('AE-Policy')), PolicyStrategy)

    def test_factor_model_needs_factor_returns(self):
        with pytest.raises(ConfigError):
            build_strategy(StrategySpec('FF-OU'))

    def test_invalid_spec(self):
        with pytest.raises(ConfigError) as info:
            build_strategy(StrategySpec('AE-OU', variant=12, option=1))
        assert 'variant' in info.value.violations[0]

    def test_seeds_depend_on_the_variant(self):
        assert strategy_seed(StrategySpec('PCA-OU', k=2), 0) == strategy_seed(StrategySpec('PCA-OU', k=2), 0)
        assert strategy_seed(StrategySpec('PCA-OU', k=2), 0) != strategy_seed(StrategySpec('PCA-OU', k=3), 0)


class TestWriter:

    def test_files_and_byte_identical_reruns(self, tmp_path, panel):
        results = [run_walk_forward(ReversalStrategy(StrategySpec('PCA-OU', label=label, k=1)), panel)
                   for label in ('b', 'a')]
        manifest = {'version': 1, 'seed': 0}
        first = ResultsWriter(tmp_path / 'one').write(results, manifest, export_intermediate=True)
        second = ResultsWriter(tmp_path / 'two').write(results, manifest, export_intermediate=True)
        names = sorted(path.relative_to(tmp_path / 'one').as_posix() for path in first)
        assert names == sorted(path.relative_to(tmp_path / 'two').as_posix() for path in second)
        assert {'metrics.csv', 'daily_returns.csv', 'weights.csv', 'equity_curve.csv', 'manifest.json',
                'diagnostics/a.json', 'diagnostics/b.json'} <= set(names)
        for name in names:
            assert (tmp_path / 'one' / name).read_bytes() == (tmp_path / 'two' / name).read_bytes()

    def test_intermediate_export_saves_fold_networks(self, tmp_path, panel):
        result = run_walk_forward(ReversalStrategy(), panel)
        nets = {'2020-01-02': Network.init(ffn_layers(), np.random.default_rng(1)),
                '2020-06-01': Network.init(ffn_layers(), np.random.default_rng(2))}
        result.networks = nets
        paths = ResultsWriter(tmp_path).write_intermediate(result)
        saved = sorted(path.relative_to(tmp_path).as_posix() for path in paths if path.parent.name == 'reversal')
        assert saved == ['networks/reversal/2020-01-02.json', 'networks/reversal/2020-06-01.json']
        for fold, net in nets.items():
            loaded = load_network(tmp_path / 'networks' / 'reversal' / f'{fold}.json')
            assert loaded.layers == net.layers
            for restored, original in zip(loaded.parameters, net.parameters):
                np.testing.assert_array_equal(restored, original)

    def test_no_networks_written_without_trained_nets(self, tmp_path, panel):
        result = run_walk_forward(ReversalStrategy(), panel)
        ResultsWriter(tmp_path).write_intermediate(result)
        assert not (tmp_path / 'networks').exists()

    def test_metrics_frame(self, panel):
        results = [run_walk_forward(ReversalStrategy(StrategySpec('PCA-OU', label=label, k=1)), panel)
                   for label in ('b', 'a')]
        frame = metrics_frame(results)
        assert list(frame.columns) == METRIC_COLUMNS
        assert list(frame['label']) == ['a', 'b']
        np.testing.assert_allclose(frame['SR'], frame['mu'] / frame['sigma'])
