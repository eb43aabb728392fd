"""Train the two-layer LSTM on a noisy sine wave and watch the loss curves."""

import numpy as np

from ftsbench.lstm import LstmNetwork, MinMaxScaler, forecast_lstm, make_windows, train_lstm
from ftsbench.series import rmse
from ftsbench.synth import gen_sine

rng = np.random.Generator(np.random.PCG64(0))
series = gen_sine(400, period=25) + 0.1 * rng.standard_normal(400)
train, test = series[:300], series[300:]

lookback = 20
scaler = MinMaxScaler.fit(train)  # fitted on training data only
train_w = make_windows(train, lookback, scaler)
test_w = make_windows(series[300 - lookback :], lookback, scaler)

net = LstmNetwork.init(lookback=lookback, hidden1=16, hidden2=8, seed=1)
net, hist = train_lstm(net, train_w, test_w, epochs=100, lr=1e-2, batch_size=32)
for epoch in (1, 10, 50, 100):
    print(f"epoch {epoch:3d}  train {hist.train_loss[epoch - 1]:.5f}  test {hist.val_loss[epoch - 1]:.5f}")

preds = forecast_lstm(net, series, len(test), scaler)
print(f"one-step test rmse {rmse(preds, test):.4f} (noise level 0.1)")
