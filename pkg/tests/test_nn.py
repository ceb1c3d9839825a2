import math

import numpy as np
import pytest

from statarb.models.errors import (DegenerateVarianceError,
                                   DimensionMismatchError,
                                   InsufficientDataError,
                                   InvalidParameterError, NonFiniteError,
                                   NonFiniteGradientError, StaleTraceError)
from statarb.nn.adam import AdamState, adam_step, adam_update
from statarb.nn.checkpoint import load_network, save_network
from statarb.nn.gradcheck import (finite_difference_check, numeric_gradients,
                                  nudge_off_kink, relative_error)
from statarb.nn.layers import Activation, LayerSpec
from statarb.nn.losses import (l1_normalize, l1_normalize_backward, mse_loss,
                               sharpe_loss)
from statarb.nn.network import Mode, Network
from statarb.nn.train import minibatches, train_network


def small_net(activation=Activation.TANH, dropout=0.0, seed=0) -> Network:
    layers = [LayerSpec(4, 6, activation, True, dropout),
              LayerSpec(6, 3, activation, False, dropout),
              LayerSpec(3, 2, Activation.IDENTITY, True)]
    return Network.init(layers, seed)


class TestNetwork:

    def test_init(self):
        net = small_net()
        assert [param.shape for param in net.parameters] == [(6, 4), (6,), (3, 6), (2, 3), (2,)]
        assert net.n_parameters == 24 + 6 + 18 + 6 + 2
        bound = math.sqrt(6.0 / 10)
        assert np.abs(net.weights[0]).max() <= bound
        np.testing.assert_array_equal(net.biases[0], 0.0)

    def test_vector_input_gives_vector_output(self):
        net = small_net().eval()
        x = np.linspace(-1, 1, 4)
        assert net.forward(x).output.shape == (2,)
        np.testing.assert_allclose(net.forward(x).output, net.predict(x[None, :])[0])

    def test_bad_inputs(self):
        net = small_net()
        with pytest.raises(DimensionMismatchError):
            net.predict(np.zeros((2, 5)))
        with pytest.raises(NonFiniteError):
            net.predict(np.array([0.0, np.nan, 0.0, 0.0]))

    def test_layers_must_chain(self):
        with pytest.raises(DimensionMismatchError):
            Network.init([LayerSpec(3, 4), LayerSpec(5, 1)])

    def test_dropout_needs_rng_in_train_mode(self):
        net = small_net(dropout=0.25)
        with pytest.raises(InvalidParameterError):
            net.forward(np.zeros((2, 4)))

    def test_eval_mode_ignores_dropout(self):
        net = small_net(dropout=0.5).eval()
        x = np.random.default_rng(1).normal(size=(5, 4))
        np.testing.assert_array_equal(net.forward(x, rng=3).output, net.forward(x, rng=4).output)

    def test_inverted_dropout_keeps_expectation(self):
        net = Network.init([LayerSpec(3, 4, Activation.IDENTITY, True, 0.25)], 0)
        x = np.tile([0.5, -1.0, 2.0], (40_000, 1))
        sampled = net.forward(x, rng=0).output.mean(axis=0)
        np.testing.assert_allclose(sampled, net.predict(x[:1])[0], rtol=0.03, atol=1e-3)

    def test_stale_trace(self):
        net = small_net()
        x = np.ones((3, 4))
        trace = net.forward(x)
        grads = net.backward(trace, np.ones((3, 2))).params
        adam_step(net, grads, AdamState.for_parameters(net.parameters))
        with pytest.raises(StaleTraceError):
            net.backward(trace, np.ones((3, 2)))

    def test_copy_is_independent(self):
        net = small_net()
        other = net.copy()
        other.weights[0][0, 0] += 1.0
        assert net.weights[0][0, 0] != other.weights[0][0, 0]

    def test_mode_switches(self):
        net = small_net()
        assert net.mode == Mode.TRAIN
        assert net.eval().mode == Mode.EVAL


class TestGradients:

    @pytest.mark.parametrize('activation', list(Activation))
    def test_backward_matches_finite_differences(self, activation):
        net = small_net(activation, seed=2)
        x = np.random.default_rng(2).normal(size=(7, 4))
        if activation == Activation.RELU:
            x = nudge_off_kink(net, x)
        target = np.random.default_rng(3).normal(size=(len(x), 2))
        assert finite_difference_check(net, x, lambda out: mse_loss(target, out)) <= 1e-4

    def test_with_frozen_dropout_masks(self):
        net = small_net(Activation.TANH, dropout=0.25, seed=4)
        x = np.random.default_rng(4).normal(size=(6, 4))
        assert finite_difference_check(net, x, lambda out: mse_loss(np.zeros_like(out), out)) <= 1e-4

    def test_input_gradient(self):
        net = small_net(seed=5)
        x = np.random.default_rng(5).normal(size=(1, 4))
        trace = net.forward(x)
        analytic = net.backward(trace, np.ones((1, 2))).inputs
        numeric = numeric_gradients([x], lambda: float(net.forward(x).output.sum()))
        assert relative_error([analytic], numeric) <= 1e-6


class TestAdam:

    def test_first_steps(self):
        param = np.array([1.0, -2.0])
        state = AdamState.for_parameters([param], lr=0.1)
        adam_update([param], [np.array([0.5, -3.0])], state)
        np.testing.assert_allclose(param, [0.9, -1.9], atol=1e-7)
        adam_update([param], [np.array([0.5, -3.0])], state)
        np.testing.assert_allclose(param, [0.8, -1.8], atol=1e-7)
        assert state.step == 2

    def test_zero_learning_rate_is_a_no_op(self):
        param = np.array([1.0])
        adam_update([param], [np.array([4.0])], AdamState.for_parameters([param], lr=0.0))
        assert param[0] == 1.0

    def test_non_finite_gradient_changes_nothing(self):
        first, second = np.array([1.0, 2.0]), np.array([3.0])
        state = AdamState.for_parameters([first, second])
        with pytest.raises(NonFiniteGradientError) as info:
            adam_update([first, second], [np.array([0.1, 0.1]), np.array([np.inf])], state)
        assert 'parameter 1' in str(info.value)
        np.testing.assert_array_equal(first, [1.0, 2.0])
        assert state.step == 0

    def test_rejects_bad_betas(self):
        with pytest.raises(InvalidParameterError):
            AdamState(beta1=1.0)


class TestLosses:

    def test_mse(self):
        loss, grad = mse_loss(np.array([1.0, 2.0]), np.array([2.0, 2.0]))
        assert loss == 0.5
        np.testing.assert_allclose(grad, [1.0, 0.0])

    def test_sharpe_of_three_days(self):
        loss, _ = sharpe_loss(np.array([0.01, 0.02, 0.03]))
        assert loss == pytest.approx(-38.88, abs=0.01)

    def test_sharpe_gradient(self):
        returns = np.random.default_rng(0).normal(0.001, 0.01, 30)
        _, analytic = sharpe_loss(returns)
        numeric = numeric_gradients([returns], lambda: sharpe_loss(returns)[0])
        assert relative_error([analytic], numeric) <= 1e-6

    @pytest.mark.parametrize('scale', [1e-3, 0.5, 7.0, 250.0])
    def test_sharpe_ignores_positive_scale(self, scale):
        returns = np.random.default_rng(2).normal(0.001, 0.01, 40)
        loss, grad = sharpe_loss(returns)
        scaled_loss, scaled_grad = sharpe_loss(scale * returns)
        assert scaled_loss == pytest.approx(loss, rel=1e-12)
        np.testing.assert_allclose(scaled_grad * scale, grad, rtol=1e-10)

    def test_sharpe_degenerate(self):
        with pytest.raises(DegenerateVarianceError):
            sharpe_loss(np.full(5, 0.01))
        with pytest.raises(InsufficientDataError):
            sharpe_loss(np.array([0.01]))

    def test_l1_normalize(self):
        np.testing.assert_allclose(l1_normalize(np.array([[2.0, -2.0], [0.0, 0.0]])), [[0.5, -0.5], [0.0, 0.0]])

    def test_l1_normalize_backward(self):
        outputs = np.array([[0.3, -0.7, 0.2], [1.5, 0.4, -0.1]])
        upstream = np.array([[1.0, 2.0, -1.0], [0.5, -0.3, 0.2]])
        analytic = l1_normalize_backward(outputs, upstream)
        numeric = numeric_gradients([outputs], lambda: float((l1_normalize(outputs) * upstream).sum()))
        assert relative_error([analytic], numeric) <= 1e-6


class TestTraining:

    def test_minibatches_cover_rows(self):
        batches = list(minibatches(10, 4, np.random.default_rng(0)))
        assert [len(batch) for batch in batches] == [4, 4, 2]
        assert sorted(np.concatenate(batches)) == list(range(10))
        assert len(list(minibatches(10, None, None))) == 1

    def test_training_reduces_loss(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(64, 4))
        y = x @ rng.normal(size=(4, 2)) * 0.3
        net = small_net(seed=1)
        losses = train_network(net, x, y, epochs=40, lr=1e-2, batch_size=16, rng=0)
        assert losses[-1] < 0.5 * losses[0]
        assert net.mode == Mode.EVAL

    def test_same_seed_same_weights(self):
        x = np.random.default_rng(0).normal(size=(32, 4))
        first, second = small_net(dropout=0.25), small_net(dropout=0.25)
        train_network(first, x, x[:, :2], 3, rng=9)
        train_network(second, x, x[:, :2], 3, rng=9)
        for a, b in zip(first.parameters, second.parameters):
            np.testing.assert_array_equal(a, b)


def test_checkpoint_round_trip(tmp_path):
    net = small_net(Activation.RELU, dropout=0.25, seed=3)
    path = tmp_path / 'net.json'
    save_network(net, path)
    loaded = load_network(path)
    x = np.random.default_rng(0).normal(size=(5, 4))
    np.testing.assert_array_equal(loaded.predict(x), net.predict(x))
    assert loaded.layers == net.layers
