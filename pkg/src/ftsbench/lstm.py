"""Two-layer LSTM regressor with a dense head, trained by BPTT and Adam.

Gate blocks are stacked in the order (input, forget, output, candidate), so a
layer with hidden size H keeps ``W`` as (4H, n_in), ``U`` as (4H, H) and ``b``
as (4H,). Everything is float64 numpy; batches run along axis 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .history import TrainingHistory
from .numerics import AdamState, adam_step

logger = logging.getLogger(__name__)

GATES = ("input", "forget", "output", "candidate")


@dataclass
class LstmLayerParams:
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        four_h, hidden = self.U.shape
        if four_h != 4 * hidden or self.W.shape[0] != four_h or self.b.shape != (four_h,):
            raise ValueError(
                f"inconsistent gate shapes W{self.W.shape} U{self.U.shape} b{self.b.shape}"
            )

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(W_g, U_g, b_g) views for one named gate."""
        k = GATES.index(name)
        s = slice(k * self.hidden, (k + 1) * self.hidden)
        return self.W[s], self.U[s], self.b[s]

    @classmethod
    def init(cls, n_in: int, hidden: int, rng: np.random.Generator) -> LstmLayerParams:
        kw, ku = 1.0 / np.sqrt(n_in), 1.0 / np.sqrt(hidden)
        W = rng.uniform(-kw, kw, size=(4 * hidden, n_in))
        U = rng.uniform(-ku, ku, size=(4 * hidden, hidden))
        b = rng.uniform(-ku, ku, size=4 * hidden)
        b[hidden : 2 * hidden] += 1.0
        return cls(W, U, b)


@dataclass
class LstmNetwork:
    layer1: LstmLayerParams
    layer2: LstmLayerParams
    V: np.ndarray
    c_out: float
    lookback: int
    seed: int = 0

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=np.float64).reshape(-1)
        self.c_out = float(self.c_out)
        if self.layer2.n_in != self.layer1.hidden:
            raise ValueError("layer2 input size must equal layer1 hidden size")
        if self.V.shape != (self.layer2.hidden,):
            raise ValueError("head size must equal layer2 hidden size")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")

    @classmethod
    def init(
        cls, lookback: int = 20, hidden1: int = 32, hidden2: int = 16, seed: int = 0
    ) -> LstmNetwork:
        rng = np.random.Generator(np.random.PCG64(seed))
        layer1 = LstmLayerParams.init(1, hidden1, rng)
        layer2 = LstmLayerParams.init(hidden1, hidden2, rng)
        k = 1.0 / np.sqrt(hidden2)
        V = rng.uniform(-k, k, size=hidden2)
        c_out = float(rng.uniform(-k, k))
        return cls(layer1, layer2, V, c_out, lookback, seed)

    def tensors(self) -> list[np.ndarray]:
        return [
            self.layer1.W, self.layer1.U, self.layer1.b,
            self.layer2.W, self.layer2.U, self.layer2.b,
            self.V,
        ]

    def get_flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors()] + [[self.c_out]])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        pos = 0
        for t in self.tensors():
            t[...] = flat[pos : pos + t.size].reshape(t.shape)
            pos += t.size
        self.c_out = float(flat[pos])
        if pos + 1 != flat.size:
            raise ValueError("flat vector has the wrong length")

    def copy(self) -> LstmNetwork:
        l1, l2 = self.layer1, self.layer2
        return LstmNetwork(
            LstmLayerParams(l1.W.copy(), l1.U.copy(), l1.b.copy()),
            LstmLayerParams(l2.W.copy(), l2.U.copy(), l2.b.copy()),
            self.V.copy(),
            self.c_out,
            self.lookback,
            self.seed,
        )

    @property
    def n_params(self) -> int:
        return sum(t.size for t in self.tensors()) + 1


@dataclass(frozen=True)
class MinMaxScaler:
    lo: float
    hi: float

    @classmethod
    def fit(cls, values) -> MinMaxScaler:
        v = np.asarray(values, dtype=np.float64)
        return cls(float(v.min()), float(v.max()))

    @property
    def span(self) -> float:
        return self.hi - self.lo if self.hi > self.lo else 1.0

    def transform(self, x):
        return (np.asarray(x, dtype=np.float64) - self.lo) / self.span

    def inverse(self, x):
        return np.asarray(x, dtype=np.float64) * self.span + self.lo


@dataclass(frozen=True)
class Windows:
    """Supervised pairs: ``X[k]`` (lookback values) predicts ``y[k]``, both scaled."""

    X: np.ndarray
    y: np.ndarray
    scaler: MinMaxScaler

    def __len__(self) -> int:
        return len(self.y)


def make_windows(series, lookback: int, scaler: MinMaxScaler | None = None) -> Windows:
    """Slide a ``lookback`` window over ``series``.

    Values are min-max scaled; when no scaler is passed one is fitted on
    ``series`` itself, so pass the training scaler when windowing test data.
    """
    x = np.asarray(series, dtype=np.float64)
    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    if len(x) <= lookback:
        raise ValueError(f"series of length {len(x)} too short for lookback {lookback}")
    if scaler is None:
        scaler = MinMaxScaler.fit(x)
    s = scaler.transform(x)
    X = np.lib.stride_tricks.sliding_window_view(s[:-1], lookback).copy()
    return Windows(X, s[lookback:].copy(), scaler)


def lstm_cell_forward(params: LstmLayerParams, x_t, h_prev, c_prev, return_gates: bool = False):
    """One LSTM step. Works on single vectors or on (batch, features) arrays."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if x_t.shape[-1] != params.n_in or h_prev.shape[-1] != params.hidden:
        raise ValueError("dimension mismatch in lstm_cell_forward")
    if c_prev.shape != h_prev.shape:
        raise ValueError("h_prev and c_prev shapes differ")
    if not (np.all(np.isfinite(x_t)) and np.all(np.isfinite(h_prev)) and np.all(np.isfinite(c_prev))):
        raise ValueError("non-finite input to lstm_cell_forward")
    h, c, gates = _cell(params, x_t, h_prev, c_prev)
    if return_gates:
        return h, c, gates
    return h, c


def _cell(params: LstmLayerParams, x_t, h_prev, c_prev):
    H = params.hidden
    z = x_t @ params.W.T + h_prev @ params.U.T + params.b
    ifo = expit(z[..., : 3 * H])
    i, f, o = ifo[..., :H], ifo[..., H : 2 * H], ifo[..., 2 * H :]
    g = np.tanh(z[..., 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    return o * tc, c, (i, f, o, g, tc)


def _layer_forward(params: LstmLayerParams, xs: np.ndarray):
    """xs: (T, B, n_in) -> hidden sequence (T, B, H) plus the BPTT cache."""
    T, B, _ = xs.shape
    H = params.hidden
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((T, B, H))
    cache = []
    for t in range(T):
        h_prev, c_prev = h, c
        h, c, gates = _cell(params, xs[t], h_prev, c_prev)
        hs[t] = h
        cache.append((xs[t], h_prev, c_prev, gates))
    return hs, cache


def _layer_backward(params: LstmLayerParams, cache, dhs: np.ndarray):
    """Backprop through time; dhs is dLoss/dh_t from above for every step."""
    H = params.hidden
    dW = np.zeros_like(params.W)
    dU = np.zeros_like(params.U)
    db = np.zeros_like(params.b)
    T, B, _ = dhs.shape
    dxs = np.empty((T, B, params.n_in))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        x, h_prev, c_prev, (i, f, o, g, tc) = cache[t]
        dh = dhs[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz[:, :H] = di * i * (1.0 - i)
        dz[:, H : 2 * H] = df * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = do * o * (1.0 - o)
        dz[:, 3 * H :] = dg * (1.0 - g * g)
        dW += dz.T @ x
        dU += dz.T @ h_prev
        db += dz.sum(axis=0)
        dxs[t] = dz @ params.W
        dh_next = dz @ params.U
        dc_next = dc * f
    return (dW, dU, db), dxs


def _forward_batch(net: LstmNetwork, X: np.ndarray):
    xs = X.T[:, :, None]
    hs1, cache1 = _layer_forward(net.layer1, xs)
    hs2, cache2 = _layer_forward(net.layer2, hs1)
    pred = hs2[-1] @ net.V + net.c_out
    return pred, (xs, hs2, cache1, cache2)


def network_forward(net: LstmNetwork, window) -> float | np.ndarray:
    """Predict the next scaled value from one window or a (batch, lookback) array."""
    X = np.asarray(window, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != net.lookback:
        raise ValueError(f"window length {X.shape[1]} != lookback {net.lookback}")
    pred, _ = _forward_batch(net, X)
    return float(pred[0]) if single else pred


def predict(net: LstmNetwork, X) -> np.ndarray:
    return _forward_batch(net, np.atleast_2d(np.asarray(X, dtype=np.float64)))[0]


def compute_gradients(net: LstmNetwork, X, y, loss_scale: float = 1.0):
    """Exact gradients of ``loss_scale * mean((pred - y)^2)`` over a batch.

    Returns ``(flat_gradient, loss)`` with the gradient laid out like
    ``net.get_flat()``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if len(y) == 0:
        raise ValueError("empty batch")
    if X.shape != (len(y), net.lookback):
        raise ValueError(f"batch shape {X.shape} does not match targets/lookback")
    pred, (xs, hs2, cache1, cache2) = _forward_batch(net, X)
    if not np.all(np.isfinite(pred)):
        raise FloatingPointError("non-finite forward value")
    err = pred - y
    loss = loss_scale * float(np.mean(err * err))
    dpred = loss_scale * 2.0 * err / len(y)
    dV = hs2[-1].T @ dpred
    dc = dpred.sum()
    dhs2 = np.zeros_like(hs2)
    dhs2[-1] = np.outer(dpred, net.V)
    g2, dhs1 = _layer_backward(net.layer2, cache2, dhs2)
    g1, _ = _layer_backward(net.layer1, cache1, dhs1)
    flat = np.concatenate([t.ravel() for t in (*g1, *g2, dV)] + [[dc]])
    return flat, loss


def mse_loss(net: LstmNetwork, X, y) -> float:
    err = predict(net, X) - np.asarray(y, dtype=np.float64)
    return float(np.mean(err * err))


def train_lstm(
    net: LstmNetwork,
    train: Windows,
    val: Windows | None = None,
    epochs: int = 100,
    lr: float = 1e-3,
    batch_size: int | None = None,
    seed: int | None = None,
) -> tuple[LstmNetwork, TrainingHistory]:
    """Adam on MSE for ``epochs`` passes; returns a trained copy and its history.

    ``batch_size=None`` means full-batch. Mini-batches are shuffled with a
    generator seeded from ``seed`` (defaults to the network seed). A
    non-finite loss stops training and keeps the last finite parameters.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if len(train) == 0:
        raise ValueError("empty training set")
    net = net.copy()
    rng = np.random.Generator(np.random.PCG64(net.seed if seed is None else seed))
    flat = net.get_flat()
    state = AdamState.zeros(flat.size, lr=lr)
    history = TrainingHistory()
    n = len(train)
    bs = n if batch_size is None else max(1, min(batch_size, n))
    for epoch in range(epochs):
        order = np.arange(n) if bs == n else rng.permutation(n)
        last_good = flat.copy()
        total = 0.0
        try:
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                grad, loss = compute_gradients(net, train.X[idx], train.y[idx])
                if not np.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                total += loss * len(idx)
                flat, state = adam_step(flat, grad, state)
                net.set_flat(flat)
            train_loss = mse_loss(net, train.X, train.y) if bs != n else total / n
            if not np.isfinite(train_loss):
                raise FloatingPointError("non-finite loss")
        except (FloatingPointError, ValueError) as exc:
            logger.warning("training diverged at epoch %d: %s", epoch + 1, exc)
            net.set_flat(last_good)
            history.diverged = True
            break
        history.train_loss.append(float(train_loss))
        history.val_loss.append(mse_loss(net, val.X, val.y) if val is not None and len(val) else float("nan"))
    return net, history


def forecast_lstm(net: LstmNetwork, history, test_len: int, scaler: MinMaxScaler) -> np.ndarray:
    """One-step walk-forward forecasts of the last ``test_len`` points of ``history``.

    Each window holds realized values; outputs are mapped back to return units.
    """
    x = np.asarray(history, dtype=np.float64)
    if test_len < 1:
        raise ValueError("test_len must be >= 1")
    if len(x) < test_len + net.lookback:
        raise ValueError(
            f"history of length {len(x)} too short for {test_len} forecasts "
            f"with lookback {net.lookback}"
        )
    s = scaler.transform(x)
    end = len(x)
    windows = np.lib.stride_tricks.sliding_window_view(s[end - test_len - net.lookback : end - 1], net.lookback)
    return scaler.inverse(predict(net, windows))
