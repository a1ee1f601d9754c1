import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fraud_dae import nn
from fraud_dae.nn import Layer, LayerSpec, NetworkParams, TrainConfig


def random_net(rng, widths, hidden="relu", out="linear"):
    specs = [LayerSpec(widths[i], widths[i + 1], hidden if i < len(widths) - 2 else out) for i in range(len(widths) - 1)]
    net = nn.init_network(specs, int(rng.integers(1 << 30)))
    for layer in net.layers:
        layer.bias[:] = rng.normal(0, 0.1, layer.bias.shape)
    return net


class TestInit:
    def test_shapes(self):
        net = nn.init_network([LayerSpec(29, 22), LayerSpec(22, 15)], seed=1)
        assert [l.weight.shape for l in net.layers] == [(22, 29), (15, 22)]
        assert net.widths == (29, 22, 15)

    def test_zero_bias_and_glorot_range(self):
        net = nn.init_network([LayerSpec(29, 22), LayerSpec(22, 15)], seed=1)
        for layer in net.layers:
            assert np.all(layer.bias == 0)
            out_dim, in_dim = layer.weight.shape
            assert np.abs(layer.weight).max() <= math.sqrt(6 / (in_dim + out_dim))

    def test_deterministic(self):
        specs = [LayerSpec(4, 3), LayerSpec(3, 2)]
        assert nn.init_network(specs, 7).equals(nn.init_network(specs, 7))
        assert not nn.init_network(specs, 7).equals(nn.init_network(specs, 8))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="chain"):
            nn.init_network([LayerSpec(4, 3), LayerSpec(2, 2)], 0)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            LayerSpec(0, 3)
        with pytest.raises(ValueError):
            LayerSpec(3, 3, "tanh")


class TestForward:
    def test_identity_linear_layer(self):
        net = NetworkParams([Layer(np.eye(3), np.zeros(3), "linear")])
        x = np.arange(6.0).reshape(2, 3) - 2
        np.testing.assert_array_equal(nn.predict(net, x), x)

    def test_relu_all_negative(self):
        net = NetworkParams([Layer(-np.eye(3), -np.ones(3), "relu")])
        assert np.all(nn.predict(net, np.abs(np.random.default_rng(0).normal(size=(4, 3)))) == 0)

    def test_matches_hand_products(self):
        rng = np.random.default_rng(3)
        net = random_net(rng, (4, 5, 2), hidden="relu", out="sigmoid")
        x = rng.normal(size=(3, 4))
        w1, b1 = net.layers[0].weight, net.layers[0].bias
        w2, b2 = net.layers[1].weight, net.layers[1].bias
        # element-by-element sums, independent of the matmul path
        hidden = [[max(0.0, sum(w1[j, k] * x[r, k] for k in range(4)) + b1[j]) for j in range(5)] for r in range(3)]
        expected = [
            [1 / (1 + math.exp(-(sum(w2[j, k] * hidden[r][k] for k in range(5)) + b2[j]))) for j in range(2)]
            for r in range(3)
        ]
        np.testing.assert_allclose(nn.predict(net, x), expected, rtol=0, atol=1e-12)

    def test_activation_list(self):
        net = random_net(np.random.default_rng(0), (3, 4, 2))
        acts = nn.forward(net, np.ones((5, 3)))
        assert [a.shape for a in acts] == [(5, 3), (5, 4), (5, 2)]

    def test_width_mismatch(self):
        net = random_net(np.random.default_rng(0), (3, 2))
        with pytest.raises(ValueError):
            nn.forward(net, np.ones((2, 4)))

    def test_sigmoid_extremes_finite(self):
        net = NetworkParams([Layer(np.eye(2), np.zeros(2), "sigmoid")])
        out = nn.predict(net, np.array([[-1000.0, 1000.0]]))
        np.testing.assert_array_equal(out, [[0.0, 1.0]])


class TestLosses:
    def test_mse_zero(self):
        x = np.random.default_rng(0).normal(size=(4, 3))
        assert nn.mse_loss(x, x) == 0.0

    def test_mse_hand_values(self):
        assert nn.mse_loss([[3.0, 4.0]], [[0.0, 0.0]]) == pytest.approx(12.5, abs=1e-12)
        assert nn.mse_loss([[1.0, 0.0], [0.0, 1.0]], np.zeros((2, 2))) == pytest.approx(0.5, abs=1e-12)

    def test_mse_shape_mismatch(self):
        with pytest.raises(ValueError):
            nn.mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))

    @given(arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)), arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)))
    def test_mse_nonnegative(self, a, b):
        value = nn.mse_loss(a, b)
        if np.array_equal(a, b):
            assert value == 0
        else:
            # squares of differences below ~1e-154 underflow to zero
            assert value > 0 or np.abs(a - b).max() < 1e-150

    def test_softmax_values(self):
        np.testing.assert_allclose(nn.softmax([[0.0, 0.0]]), [[0.5, 0.5]], atol=1e-15)
        e = math.e
        np.testing.assert_allclose(nn.softmax([[1.0, 2.0]]), [[1 / (1 + e), e / (1 + e)]], atol=1e-15)
        np.testing.assert_allclose(nn.softmax([[1000.0, 1001.0]]), nn.softmax([[0.0, 1.0]]), atol=1e-15)

    @given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 6)), elements=st.floats(-1e3, 1e3)))
    def test_softmax_rows_sum_to_one(self, logits):
        p = nn.softmax(logits)
        assert np.all(p >= 0)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)

    def test_cross_entropy_values(self):
        assert nn.cross_entropy_loss([[1.0, 0.0], [0.0, 1.0]], [0, 1]) == 0.0
        assert nn.cross_entropy_loss([[0.5, 0.5]] * 3, [0, 1, 1]) == pytest.approx(math.log(2), abs=1e-12)
        assert nn.cross_entropy_loss([[0.75, 0.25]], [1]) == pytest.approx(math.log(4), abs=1e-12)

    def test_cross_entropy_clamped(self):
        assert nn.cross_entropy_loss([[1.0, 0.0]], [1]) == pytest.approx(-math.log(nn.LOG_EPS))

    def test_cross_entropy_label_range(self):
        with pytest.raises(ValueError):
            nn.cross_entropy_loss([[0.5, 0.5]], [2])
        with pytest.raises(ValueError):
            nn.cross_entropy_loss([[0.5, 0.5]], [0, 1])


class TestBackward:
    def test_zero_signal(self):
        net = random_net(np.random.default_rng(1), (3, 4, 2))
        x = np.random.default_rng(2).normal(size=(5, 3))
        grads = nn.backward(net, x, nn.predict(net, x), "mse")
        assert all(np.all(g == 0) for g in grads.arrays())

    @pytest.mark.parametrize("loss", ["mse", "softmax_xent"])
    def test_matches_finite_differences_29_5_2(self, loss):
        rng = np.random.default_rng(11)
        net = random_net(rng, (29, 5, 2))
        x = rng.normal(size=(6, 29))
        target = rng.normal(size=(6, 2)) if loss == "mse" else rng.integers(0, 2, 6)
        assert nn.gradient_check(net, x, target, loss, 1e-5) < 1e-6

    def test_softmax_single_layer_closed_form(self):
        rng = np.random.default_rng(4)
        net = NetworkParams([Layer(np.zeros((2, 3)), np.zeros(2), "linear")])
        x = rng.normal(size=(4, 3))
        y = np.array([0, 1, 1, 0])
        delta = (np.full((4, 2), 0.5) - np.eye(2)[y]) / 4
        grads = nn.backward(net, x, y, "softmax_xent")
        np.testing.assert_allclose(grads.layers[0].weight, delta.T @ x, atol=1e-15)
        np.testing.assert_allclose(grads.layers[0].bias, delta.sum(axis=0), atol=1e-15)

    def test_gradient_check_detects_corruption(self, monkeypatch):
        rng = np.random.default_rng(5)
        net = random_net(rng, (4, 3, 2))
        x = rng.normal(size=(5, 4))
        y = rng.normal(size=(5, 2))
        real = nn.backward

        def doubled(*args):
            grads = real(*args)
            grads.layers[0].weight[0, 0] *= 2
            return grads

        monkeypatch.setattr(nn, "backward", doubled)
        assert nn.gradient_check(net, x, y, "mse") > 0.1


class TestSgd:
    def test_zero_grad_is_identity(self):
        net = random_net(np.random.default_rng(0), (3, 2))
        assert nn.sgd_step(net, net.zeros_like(), 0.5).equals(net)

    def test_arithmetic(self):
        net = NetworkParams([Layer(np.array([[2.0]]), np.array([0.0]), "linear")])
        grads = NetworkParams([Layer(np.array([[0.5]]), np.array([0.0]), "linear")])
        assert nn.sgd_step(net, grads, 1.0).layers[0].weight[0, 0] == 1.5

    def test_two_steps_equal_summed_step(self):
        rng = np.random.default_rng(0)
        net = random_net(rng, (3, 2))
        g1, g2 = random_net(rng, (3, 2)), random_net(rng, (3, 2))
        summed = NetworkParams([Layer(a.weight + b.weight, a.bias + b.bias, a.activation) for a, b in zip(g1.layers, g2.layers)])
        two = nn.sgd_step(nn.sgd_step(net, g1, 0.1), g2, 0.1)
        one = nn.sgd_step(net, summed, 0.1)
        for a, b in zip(two.arrays(), one.arrays()):
            np.testing.assert_allclose(a, b, atol=1e-15)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            nn.sgd_step(random_net(rng, (3, 2)), random_net(rng, (3, 3)), 0.1)


class TestTrain:
    def test_identity_map_converges(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, size=(64, 2))
        net = nn.init_network([LayerSpec(2, 2, "linear"), LayerSpec(2, 2, "linear")], 0)
        _, history = nn.train(net, x, x, "mse", TrainConfig(epochs=2000, batch_size=16, learning_rate=0.05, seed=0))
        assert history[-1] < 1e-3
        assert all(np.isfinite(history))

    def test_reproducible(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 3))
        y = (x[:, 0] > 0).astype(int)
        net = nn.init_network([LayerSpec(3, 4), LayerSpec(4, 2, "linear")], 2)
        cfg = TrainConfig(epochs=5, batch_size=8, learning_rate=0.1, seed=3)
        p1, h1 = nn.train(net, x, y, "softmax_xent", cfg)
        p2, h2 = nn.train(net, x, y, "softmax_xent", cfg)
        assert h1 == h2
        assert p1.equals(p2)

    def test_does_not_modify_start(self):
        net = nn.init_network([LayerSpec(3, 2, "linear")], 0)
        before = net.copy()
        nn.train(net, np.ones((4, 3)), np.zeros((4, 2)), "mse", TrainConfig(epochs=2))
        assert net.equals(before)

    def test_empty(self):
        net = nn.init_network([LayerSpec(3, 2, "linear")], 0)
        with pytest.raises(ValueError, match="empty"):
            nn.train(net, np.empty((0, 3)), np.empty((0, 2)), "mse", TrainConfig())

    def test_bad_config(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0)


class TestSerialization:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(9)
        net = random_net(rng, (29, 22, 15, 2))
        path = tmp_path / "net.model"
        nn.save_network(path, net, {"kind": "test"})
        loaded, meta = nn.load_network(path)
        assert meta == {"kind": "test"}
        assert loaded.equals(net)
        x = rng.normal(size=(10, 29)) * 100
        np.testing.assert_array_equal(nn.predict(loaded, x), nn.predict(net, x))

    def test_layout(self):
        net = NetworkParams([Layer(np.array([[0.1, 1 / 3]]), np.array([2.0]), "sigmoid")])
        lines = nn.dumps_network(net).splitlines()
        assert lines[0] == "fraud-dae-network 1"
        assert lines[3] == "2 1 sigmoid"
        assert lines[4] == "0.10000000000000001 0.33333333333333331"

    def test_truncated(self):
        text = nn.dumps_network(random_net(np.random.default_rng(0), (4, 3, 2)))
        for cut in (10, len(text) // 2, len(text) - 5):
            with pytest.raises(nn.ModelFormatError):
                nn.loads_network(text[:cut])

    def test_version_mismatch(self):
        text = nn.dumps_network(random_net(np.random.default_rng(0), (2, 2)))
        with pytest.raises(nn.ModelFormatError, match=r"version 7.*version 1"):
            nn.loads_network(text.replace("fraud-dae-network 1", "fraud-dae-network 7", 1))

    def test_garbage_value(self):
        text = nn.dumps_network(random_net(np.random.default_rng(0), (2, 2)))
        lines = text.splitlines()
        lines[4] = "1.0 abc"
        with pytest.raises(nn.ModelFormatError):
            nn.loads_network("\n".join(lines))

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 6), min_size=2, max_size=4), st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, widths, seed):
        net = random_net(np.random.default_rng(seed), widths, hidden="sigmoid")
        assert nn.loads_network(nn.dumps_network(net))[0].equals(net)
