import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftsbench.lstm import (
    LstmLayerParams,
    LstmNetwork,
    MinMaxScaler,
    compute_gradients,
    forecast_lstm,
    lstm_cell_forward,
    make_windows,
    mse_loss,
    network_forward,
    predict,
    train_lstm,
)
from ftsbench.numerics import check_gradient, finite_diff_gradient
from ftsbench.synth import gen_sine


def zero_layer(n_in, hidden):
    return LstmLayerParams(np.zeros((4 * hidden, n_in)), np.zeros((4 * hidden, hidden)), np.zeros(4 * hidden))


def zero_net(lookback=3, h1=2, h2=2, c_out=0.37):
    return LstmNetwork(zero_layer(1, h1), zero_layer(h1, h2), np.zeros(h2), c_out, lookback)


def scalar_cell(params, x, h, c):
    """Unit-by-unit evaluation with explicit sums."""
    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    H = params.hidden
    h_new, c_new = [], []
    for k in range(H):
        pre = {}
        for name in ("input", "forget", "output", "candidate"):
            W, U, b = params.gate(name)
            s = b[k]
            for j in range(params.n_in):
                s += W[k, j] * x[j]
            for j in range(H):
                s += U[k, j] * h[j]
            pre[name] = s
        ck = sig(pre["forget"]) * c[k] + sig(pre["input"]) * math.tanh(pre["candidate"])
        c_new.append(ck)
        h_new.append(sig(pre["output"]) * math.tanh(ck))
    return np.array(h_new), np.array(c_new)


class TestCell:
    def test_zero_weights_zero_state(self):
        h, c = lstm_cell_forward(zero_layer(1, 1), [0.5], [0.0], [0.0])
        assert h[0] == 0.0 and c[0] == 0.0

    def test_zero_weights_unit_cell(self):
        h, c = lstm_cell_forward(zero_layer(1, 1), [0.0], [0.0], [1.0])
        assert c[0] == 0.5
        assert h[0] == pytest.approx(0.5 * math.tanh(0.5), abs=1e-15)
        assert h[0] == pytest.approx(0.23106, abs=1e-5)

    def test_matches_scalar_oracle(self, rng):
        for _ in range(20):
            p = LstmLayerParams.init(2, 2, rng)
            x, h, c = rng.normal(size=2), rng.normal(size=2), rng.normal(size=2)
            h1, c1 = lstm_cell_forward(p, x, h, c)
            h2, c2 = scalar_cell(p, x, h, c)
            np.testing.assert_allclose(h1, h2, atol=1e-12, rtol=0)
            np.testing.assert_allclose(c1, c2, atol=1e-12, rtol=0)

    def test_gate_ranges(self, rng):
        p = LstmLayerParams.init(3, 4, rng)
        p.W *= 5
        _, _, (i, f, o, g, tc) = lstm_cell_forward(p, rng.normal(size=(8, 3)), np.zeros((8, 4)), np.zeros((8, 4)), True)
        for gate in (i, f, o):
            assert np.all((gate > 0) & (gate < 1))
        for act in (g, tc):
            assert np.all(np.abs(act) < 1)

    def test_forget_bias_init(self, rng):
        p = LstmLayerParams.init(1, 4, rng)
        _, _, b = p.gate("forget")
        assert np.all(b >= 0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lstm_cell_forward(zero_layer(2, 1), [0.0], [0.0], [0.0])


class TestNetwork:
    def test_zero_params_give_head_bias(self):
        assert network_forward(zero_net(), [0.1, 0.9, -3.0]) == 0.37

    def test_head_rescale_irrelevant_at_zero_hidden(self):
        net = zero_net(c_out=0.1)
        net.V[:] = 0.7
        a = network_forward(net, [1.0, 2.0, 3.0])
        net.V[:] = 1.4
        assert network_forward(net, [1.0, 2.0, 3.0]) == a == 0.1

    def test_deterministic(self):
        w = np.linspace(0, 1, 20)
        a = network_forward(LstmNetwork.init(seed=5), w)
        b = network_forward(LstmNetwork.init(seed=5), w)
        assert a == b

    def test_window_length_checked(self):
        with pytest.raises(ValueError):
            network_forward(LstmNetwork.init(lookback=4), [1.0, 2.0])

    def test_layer_size_mismatch(self, rng):
        with pytest.raises(ValueError):
            LstmNetwork(LstmLayerParams.init(1, 3, rng), LstmLayerParams.init(2, 2, rng), np.zeros(2), 0.0, 5)

    def test_flat_round_trip(self):
        net = LstmNetwork.init(lookback=4, hidden1=3, hidden2=2, seed=1)
        flat = net.get_flat()
        other = LstmNetwork.init(lookback=4, hidden1=3, hidden2=2, seed=2)
        other.set_flat(flat)
        np.testing.assert_array_equal(other.get_flat(), flat)
        assert net.n_params == flat.size


class TestGradients:
    def test_against_central_differences(self, rng):
        # coordinates with gradients near 1e-7 carry ~1e-5 relative rounding
        # noise at a 1e-5 step, so the worst case is held to 1e-4 and the
        # typical coordinate to 1e-6
        worst, typical = 0.0, []
        for i in range(10):
            net = LstmNetwork.init(lookback=5, hidden1=8, hidden2=4, seed=i)
            X, y = rng.normal(size=(3, 5)), rng.normal(size=3)
            grad, _ = compute_gradients(net, X, y)
            probe = net.copy()

            def f(flat):
                probe.set_flat(flat)
                return mse_loss(probe, X, y)

            num = finite_diff_gradient(f, net.get_flat(), 1e-5)
            worst = max(worst, check_gradient(grad, num))
            typical.append(np.median(np.abs(grad - num) / np.maximum(1e-8, np.abs(grad) + np.abs(num))))
        assert worst < 1e-4
        assert np.median(typical) < 1e-6

    def test_zero_at_exact_targets(self, rng):
        net = LstmNetwork.init(lookback=4, hidden1=3, hidden2=2, seed=0)
        X = rng.normal(size=(5, 4))
        grad, loss = compute_gradients(net, X, predict(net, X))
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_linear_in_loss_scale(self, rng):
        net = LstmNetwork.init(lookback=4, hidden1=3, hidden2=2, seed=0)
        X, y = rng.normal(size=(5, 4)), rng.normal(size=5)
        g1, l1 = compute_gradients(net, X, y)
        g2, l2 = compute_gradients(net, X, y, loss_scale=2.0)
        np.testing.assert_allclose(g2, 2 * g1, rtol=1e-14)
        assert l2 == pytest.approx(2 * l1, rel=1e-15)

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            compute_gradients(LstmNetwork.init(lookback=3), np.zeros((0, 3)), [])


class TestWindows:
    def test_example(self):
        w = make_windows([1, 2, 3, 4, 5], 2)
        np.testing.assert_allclose(w.scaler.inverse(w.X), [[1, 2], [2, 3], [3, 4]])
        np.testing.assert_allclose(w.scaler.inverse(w.y), [3, 4, 5])

    def test_lookback_equal_length(self):
        with pytest.raises(ValueError):
            make_windows([1, 2, 3], 3)

    def test_count(self):
        assert len(make_windows(np.arange(100.0), 10)) == 90

    def test_scaled_to_unit_interval_on_train(self, rng):
        w = make_windows(rng.normal(size=50), 5)
        allv = np.concatenate([w.X.ravel(), w.y])
        assert allv.min() >= 0 and allv.max() <= 1

    def test_external_scaler_used(self):
        sc = MinMaxScaler(0.0, 10.0)
        w = make_windows([5.0, 6.0, 7.0], 1, sc)
        np.testing.assert_allclose(w.X[:, 0], [0.5, 0.6])

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=40))
    def test_scaler_round_trip(self, xs):
        sc = MinMaxScaler.fit(xs)
        np.testing.assert_allclose(sc.inverse(sc.transform(xs)), xs, atol=1e-9)


class TestTraining:
    def test_history_length_default(self):
        w = make_windows(gen_sine(30), 5)
        _, hist = train_lstm(LstmNetwork.init(lookback=5, hidden1=4, hidden2=2), w)
        assert hist.epochs == 100 == len(hist.val_loss)
        assert all(v >= 0 for v in hist.train_loss)

    def test_deterministic(self):
        w = make_windows(gen_sine(40), 5)
        net = LstmNetwork.init(lookback=5, hidden1=4, hidden2=2, seed=3)
        _, h1 = train_lstm(net, w, w, epochs=5, batch_size=4)
        _, h2 = train_lstm(net, w, w, epochs=5, batch_size=4)
        assert h1.train_loss == h2.train_loss and h1.val_loss == h2.val_loss

    def test_zero_lr_keeps_params(self):
        w = make_windows(gen_sine(30), 5)
        net = LstmNetwork.init(lookback=5, hidden1=4, hidden2=2, seed=3)
        trained, _ = train_lstm(net, w, epochs=3, lr=0.0)
        assert trained.get_flat().tobytes() == net.get_flat().tobytes()

    def test_does_not_mutate_input(self):
        w = make_windows(gen_sine(30), 5)
        net = LstmNetwork.init(lookback=5, hidden1=4, hidden2=2, seed=3)
        before = net.get_flat()
        train_lstm(net, w, epochs=2)
        np.testing.assert_array_equal(net.get_flat(), before)

    def test_overfits_small_set(self):
        w = make_windows(gen_sine(25, period=10), 5)
        _, hist = train_lstm(LstmNetwork.init(lookback=5, hidden1=8, hidden2=4), w, epochs=600, lr=1e-2)
        assert hist.train_loss[-1] < 1e-3

    def test_bad_epochs(self):
        w = make_windows(gen_sine(30), 5)
        with pytest.raises(ValueError):
            train_lstm(LstmNetwork.init(lookback=5), w, epochs=0)


class TestForecast:
    def test_constant_history(self):
        net = LstmNetwork.init(lookback=4, hidden1=3, hidden2=2, seed=1)
        out = forecast_lstm(net, np.full(30, 0.01), 10, MinMaxScaler.fit(np.full(20, 0.01)))
        assert len(out) == 10
        assert np.all(out == out[0])

    def test_scaled_and_unscaled_agree(self, rng):
        x = rng.normal(0, 0.01, size=60)
        net = LstmNetwork.init(lookback=6, hidden1=4, hidden2=3, seed=2)
        sc = MinMaxScaler.fit(x[:45])
        out = forecast_lstm(net, x, 15, sc)
        windows = np.array([sc.transform(x[t - 6 : t]) for t in range(45, 60)])
        manual = sc.inverse([network_forward(net, w) for w in windows])
        np.testing.assert_allclose(out, manual, atol=1e-10)

    def test_uses_realized_values(self, rng):
        x = rng.normal(size=40)
        net = LstmNetwork.init(lookback=5, hidden1=4, hidden2=3, seed=2)
        sc = MinMaxScaler.fit(x[:30])
        a = forecast_lstm(net, x, 10, sc)
        y = x.copy()
        y[35] += 1.0
        b = forecast_lstm(net, y, 10, sc)
        np.testing.assert_array_equal(a[:6], b[:6])
        assert not np.allclose(a[6:], b[6:])

    def test_history_too_short(self):
        net = LstmNetwork.init(lookback=5)
        with pytest.raises(ValueError):
            forecast_lstm(net, np.zeros(8), 5, MinMaxScaler(0.0, 1.0))
