import numpy as np
import pytest
from scipy import linalg

from statarb.factors.autoencoder import (AE_VARIANTS, AETraining,
                                         AutoencoderModel, autoencoder_layers,
                                         autoencoder_residuals,
                                         encoder_depth, fit_autoencoder_day,
                                         get_variant, train_autoencoder)
from statarb.factors.exogenous import ExogenousModel, exogenous_residuals
from statarb.factors.ols import ols_fit
from statarb.factors.pca import (PCAModel, decompose_correlation, pca_factors,
                                 pca_residuals)
from statarb.market_data.synthetic import generate_synthetic_panel
from statarb.models.errors import (InsufficientDataError,
                                   InvalidParameterError)
from statarb.models.panel import FactorReturns, SyntheticSpec, UniverseMask
from statarb.nn.layers import Activation, LayerSpec
from statarb.nn.network import Network
from statarb.nn.train import train_network
from statarb.service import synthetic_factor_returns
from tests.conftest import make_panel

QUICK = AETraining(latent=3, epochs=2)


def column_correlation(values, truth, rows):
    """Mean over stocks of the correlation between model residuals and the planted increments."""
    index = np.asarray(rows)
    return float(np.mean([np.corrcoef(values[index, column], truth[index, column])[0, 1]
                          for column in range(values.shape[1])]))


class TestOls:

    def test_recovers_coefficients(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 2))
        y = 0.5 + x @ np.array([1.5, -2.0])
        fit = ols_fit(x, y)
        np.testing.assert_allclose(fit.beta, [1.5, -2.0], atol=1e-12)
        assert fit.intercept == pytest.approx(0.5)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.full_rank

    def test_several_targets(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(40, 3))
        beta = rng.normal(size=(3, 4))
        fit = ols_fit(x, x @ beta, intercept=False)
        np.testing.assert_allclose(fit.beta, beta, atol=1e-12)
        np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            ols_fit(np.ones((3, 2)), np.ones(3))

    def test_rank_deficient_is_reported(self):
        x = np.random.default_rng(2).normal(size=(30, 1))
        fit = ols_fit(np.hstack([x, 2 * x]), x[:, 0])
        assert not fit.full_rank
        np.testing.assert_allclose(fit.project(np.hstack([x, 2 * x])), x[:, 0], atol=1e-10)

    def test_constant_target_has_zero_r2(self):
        fit = ols_fit(np.arange(10.0), np.full(10, 3.0))
        assert fit.r2 == 0.0


def factor_panel(n_days=130, n_stocks=5, alpha=0.0, seed=0):
    rng = np.random.default_rng(seed)
    f = rng.normal(0, 0.01, (n_days, 2))
    loadings = rng.normal(1, 0.5, (n_stocks, 2))
    panel = make_panel(alpha + f @ loadings.T)
    return panel, FactorReturns(panel.dates, ('mkt', 'smb'), f, np.zeros(n_days))


class TestExogenous:

    def test_out_of_sample_residual_variance_matches_planted(self):
        panel, truth = generate_synthetic_panel(SyntheticSpec(n_stocks=20, n_days=560, n_factors=3, seed=5))
        residuals = exogenous_residuals(panel, synthetic_factor_returns(panel, truth))
        days = slice(60, 560)
        assert np.isfinite(residuals.values[days]).all()
        ratio = np.var(residuals.values[days]) / np.var(truth.increments[days])
        assert ratio == pytest.approx(1.0, abs=0.1)

    def test_intercept_is_not_projected(self):
        panel, factors = factor_panel(alpha=0.001)
        residuals = exogenous_residuals(panel, factors)
        assert np.isnan(residuals.values[:60]).all()
        np.testing.assert_allclose(residuals.values[60:], 0.001, atol=1e-12)

    def test_factor_subset_names_variant(self):
        _, factors = factor_panel()
        assert ExogenousModel(factors.select(['mkt'])).variant == 'mkt'

    def test_stock_with_missing_window_is_skipped(self):
        panel, factors = factor_panel()
        returns = np.array(panel.returns)
        returns[70, 2] = np.nan
        residuals = exogenous_residuals(panel.with_returns(returns), factors, rows=range(60, 130))
        assert np.isfinite(residuals.values[69, 2])
        assert np.isnan(residuals.values[70:130, 2]).all()
        assert not np.isnan(residuals.values[100, 1])

    def test_ineligible_stock_is_skipped(self):
        panel, factors = factor_panel()
        universe = UniverseMask(panel.dates[:1], np.array([0]), np.array([[True, False, True, True, True]]))
        residuals = ExogenousModel(factors).residuals(panel, universe, range(60, 62))
        assert np.isnan(residuals.values[60:62, 1]).all()
        assert np.isfinite(residuals.values[60:62, 0]).all()


class TestPca:

    @pytest.mark.parametrize('rho', [-0.6, 0.0, 0.3, 0.9])
    def test_two_by_two_closed_form(self, rho):
        values, vectors, spectrum = decompose_correlation(np.array([[1.0, rho], [rho, 1.0]]), 2)
        np.testing.assert_allclose(values, sorted([1 + rho, 1 - rho], reverse=True), atol=1e-12)
        assert spectrum.sum() == pytest.approx(2.0)
        assert (vectors[0] >= 0).all()

    def test_sign_rule(self):
        rng = np.random.default_rng(3)
        z = rng.normal(size=(100, 6))
        correlation = np.corrcoef(z, rowvar=False)
        _, vectors, _ = decompose_correlation(correlation, 6)
        for column in vectors.T:
            assert column[np.argmax(np.abs(column))] > 0

    def test_k_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            decompose_correlation(np.eye(3), 4)

    def test_self_consistency(self, panel):
        model = pca_factors(panel, 300, 3)
        c, v = model.correlation, model.eigenvectors
        np.testing.assert_allclose(c @ v, v * model.eigenvalues, atol=1e-8)
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-8)
        assert model.spectrum.sum() == pytest.approx(panel.n_stocks, abs=1e-6)
        np.testing.assert_allclose(model.weights, v / model.volatility[:, None])

    def test_exact_factor_structure_leaves_no_residual(self):
        panel, _ = factor_panel(n_days=260, n_stocks=6, seed=4)
        residuals = pca_residuals(panel, 2, rows=range(252, 260))
        np.testing.assert_allclose(residuals.values[252:], 0.0, atol=1e-10)
        assert np.isnan(residuals.values[:252]).all()

    def test_single_factor_residuals_track_planted_increments(self):
        loadings = np.random.default_rng(11).uniform(0.5, 1.5, (30, 1))
        spec = SyntheticSpec(n_stocks=30, n_days=502, n_factors=1, loadings=loadings, seed=11)
        panel, truth = generate_synthetic_panel(spec)
        rows = range(252, 502)
        residuals = pca_residuals(panel, 1, rows=rows)
        assert column_correlation(residuals.values, truth.increments, rows) > 0.9

    def test_too_few_stocks_skips_day(self):
        panel, _ = factor_panel(n_days=260, n_stocks=2)
        residuals = PCAModel(3).residuals(panel, rows=range(252, 254))
        assert np.isnan(residuals.values).all()


class TestAutoencoder:

    def test_variant_table(self):
        assert len(AE_VARIANTS) == 10
        assert [v.id for v in AE_VARIANTS.values() if v.dropout > 0] == [0, 1, 5, 6]
        assert [v.id for v in AE_VARIANTS.values() if not v.has_bias] == [3, 4, 8, 9]
        assert [v.id for v in AE_VARIANTS.values() if v.encoder_layers == 3] == [1, 4, 6, 9]
        assert all(v.activation == Activation.RELU for v in AE_VARIANTS.values() if v.id >= 5)
        with pytest.raises(InvalidParameterError):
            get_variant(10)

    def test_deep_layers(self):
        layers = autoencoder_layers(40, 6, 5)
        assert [(layer.in_dim, layer.out_dim) for layer in layers] == [(40, 64), (64, 32), (32, 5), (5, 40)]
        assert layers[-1].activation == Activation.TANH
        assert layers[-1].dropout == 0.0
        assert encoder_depth(Network.init(layers)) == 3

    def test_linear_autoencoder_spans_pca_subspace(self):
        rng = np.random.default_rng(0)
        latent = rng.normal(size=(200, 3)) * np.array([3.0, 2.0, 1.5])
        x = latent @ rng.normal(size=(3, 8)) + 0.1 * rng.normal(size=(200, 8))
        x = x - x.mean(axis=0)
        layers = [LayerSpec(8, 3, Activation.IDENTITY, False), LayerSpec(3, 8, Activation.IDENTITY, False)]
        net = Network.init(layers, 1)
        train_network(net, x, x, epochs=3000, lr=1e-2, batch_size=None)
        _, vectors = linalg.eigh(x.T @ x)
        angles = np.degrees(linalg.subspace_angles(net.weights[1], vectors[:, -3:]))
        assert angles.max() <= 5.0

    @pytest.mark.slow
    def test_option_two_residuals_track_planted_increments(self):
        loadings = np.random.default_rng(13).uniform(0.5, 1.5, (20, 1))
        spec = SyntheticSpec(n_stocks=20, n_days=502, n_factors=1, loadings=loadings, seed=13)
        panel, truth = generate_synthetic_panel(spec)
        rows = range(252, 502)
        training = AETraining(latent=1, epochs=100, lr=1e-2, batch_size=None)
        residuals = autoencoder_residuals(panel, 2, 2, seed=3, training=training, rows=rows, workers=4)
        assert column_correlation(residuals.values, truth.increments, rows) > 0.8

    @pytest.mark.parametrize('variant', sorted(AE_VARIANTS))
    def test_training_loss_falls_on_average(self, variant):
        curves = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            z = 0.8 * rng.normal(size=(128, 1)) + 0.6 * rng.normal(size=(128, 10))
            _, losses = train_autoencoder(z, variant, seed, AETraining(latent=3, lr=3e-3))
            curves.append(losses)
        curve = np.mean(curves, axis=0)
        assert len(curve) == 10
        rises = curve[1:] / curve[:-1] - 1.0
        rises = rises[rises > 0]
        assert len(rises) <= 2
        assert (rises <= 0.05).all()
        assert curve[-1] < curve[0]

    def test_dropout_changes_the_trained_weights(self):
        z = np.random.default_rng(4).normal(size=(64, 10))
        start_0, _ = train_autoencoder(z, 0, 4, AETraining(latent=3, epochs=0))
        start_2, _ = train_autoencoder(z, 2, 4, AETraining(latent=3, epochs=0))
        for a, b in zip(start_0.parameters, start_2.parameters):
            np.testing.assert_array_equal(a, b)
        dropped, _ = train_autoencoder(z, 0, 4, QUICK)
        plain, _ = train_autoencoder(z, 2, 4, QUICK)
        assert any(not np.array_equal(a, b) for a, b in zip(dropped.parameters, plain.parameters))

    def test_zero_input_is_a_fixed_point_without_bias(self):
        net, losses = train_autoencoder(np.zeros((64, 10)), 3, 6, QUICK)
        assert losses == [0.0, 0.0]
        np.testing.assert_array_equal(net.predict(np.zeros((1, 10))), 0.0)

    def test_day_model_residuals(self, panel):
        for option in (1, 2, 3):
            model = fit_autoencoder_day(panel, 320, 2, option, seed=1, training=QUICK)
            residuals = model.residuals(panel)
            assert residuals.shape == (panel.n_stocks,)
            assert np.isfinite(residuals).all()

    def test_first_row(self):
        assert AutoencoderModel(2, 1).first_row == 252
        assert AutoencoderModel(2, 3).first_row == 312

    def test_workers_do_not_change_residuals(self, panel):
        rows = range(252, 256)
        sequential = AutoencoderModel(5, 1, seed=2, training=QUICK).residuals(panel, rows=rows)
        parallel = AutoencoderModel(5, 1, seed=2, training=QUICK, workers=3).residuals(panel, rows=rows)
        np.testing.assert_array_equal(sequential.values, parallel.values)
        assert np.isfinite(sequential.values[252:256]).all()

    def test_latent_wider_than_universe_skips(self, panel):
        wide = AETraining(latent=20, epochs=1)
        residuals = AutoencoderModel(2, 1, training=wide).residuals(panel, rows=range(252, 254))
        assert np.isnan(residuals.values).all()

    def test_function_form_matches_model(self, panel):
        rows = range(252, 254)
        direct = autoencoder_residuals(panel, 7, 2, seed=4, training=QUICK, rows=rows)
        model = AutoencoderModel(7, 2, seed=4, training=QUICK).residuals(panel, rows=rows)
        np.testing.assert_array_equal(direct.values, model.values)
        assert direct.variant == 'variant 7 option 2'
