"""Gradient and invariant self-checks shared by the CLI ``check`` command."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lstm
from .garch import GarchParams, garch_filter, garch_log_likelihood
from .numerics import check_gradient, finite_diff_gradient
from .text.encoder import (
    TextEncoderModel,
    encoder_forward,
    mlm_loss_and_grads,
    regression_loss_and_grads,
    scaled_dot_attention,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.threshold)

    def to_dict(self) -> dict:
        return {"check": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


# Some coordinates of these random instances have gradients within a few
# multiples of the 1e-8 floor of check_gradient. A two-point stencil cannot
# resolve them to 1e-4 at any single step (rounding noise dominates below
# ~1e-4, truncation error above), so the reference uses the five-point
# stencil at a step near the float64 optimum for it, eps**(1/5).
FD_ORDER = 4
FD_STEP = 1e-3


def lstm_gradient_error(draws: int = 100, seed: int = 0, hidden=(8, 4), lookback: int = 5, batch: int = 4) -> float:
    """Worst relative error of LSTM gradients against central differences."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for i in range(draws):
        net = lstm.LstmNetwork.init(lookback=lookback, hidden1=hidden[0], hidden2=hidden[1], seed=seed * 1000 + i)
        # widen the weights so gates leave their linear regime
        net.set_flat(net.get_flat() * rng.uniform(1.0, 3.0))
        X = rng.normal(size=(batch, lookback))
        y = rng.normal(size=batch)
        grad, _ = lstm.compute_gradients(net, X, y)
        probe = net.copy()

        def f(flat):
            probe.set_flat(flat)
            return lstm.mse_loss(probe, X, y)

        worst = max(worst, check_gradient(grad, finite_diff_gradient(f, net.get_flat(), FD_STEP, FD_ORDER)))
    return worst


def _text_instance(rng, seed: int, vocab: int = 20, length: int = 8, batch: int = 3):
    model = TextEncoderModel(vocab, d_model=16, n_heads=2, n_blocks=1, d_ff=32, max_len=length, seed=seed)
    model.reinit(0.5, bias_std=0.1)
    ids = rng.integers(4, vocab, size=(batch, length))
    ids[:, 0] = 2
    lengths = rng.integers(2, length + 1, size=batch)
    mask = np.arange(length)[None, :] < lengths[:, None]
    ids[~mask] = 0
    return model, ids, mask


def text_gradient_error(head: str, draws: int = 20, seed: int = 0) -> float:
    """Worst relative gradient error of the regression or masked-token head."""
    if head not in ("regression", "masked"):
        raise ValueError(f"unknown head {head!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for i in range(draws):
        model, ids, mask = _text_instance(rng, seed * 1000 + i)
        if head == "regression":
            y = rng.normal(size=ids.shape[0])

            def loss(m, need_grad=True):
                return regression_loss_and_grads(m, ids, mask, y, need_grad=need_grad)
        else:
            chosen = mask & (rng.random(ids.shape) < 0.4)
            chosen[:, 1] = True
            corrupted = np.where(chosen, 3, ids)

            def loss(m, need_grad=True):
                return mlm_loss_and_grads(m, corrupted, mask, ids, chosen, need_grad=need_grad)

        _, grads = loss(model)
        analytic = model.flatten_grads(grads)
        probe = model.copy()

        def f(flat):
            probe.set_flat(flat)
            return loss(probe, need_grad=False)[0]

        worst = max(worst, check_gradient(analytic, finite_diff_gradient(f, model.get_flat(), FD_STEP, FD_ORDER)))
    return worst


def attention_invariants(instances: int = 100, seed: int = 0) -> dict[str, float]:
    """Worst row-sum error, masked weight and PAD-extension drift over random cases."""
    rng = np.random.Generator(np.random.PCG64(seed))
    row_err = masked = drift = 0.0
    for i in range(instances):
        L, d = int(rng.integers(2, 12)), int(rng.integers(1, 9))
        Q, K, V = (rng.normal(size=(L, d)) * rng.uniform(0.1, 5.0) for _ in range(3))
        n_valid = int(rng.integers(1, L + 1))
        mask = np.arange(L) < n_valid
        _, w = scaled_dot_attention(Q, K, V, mask)
        row_err = max(row_err, float(np.max(np.abs(w.sum(axis=-1) - 1.0))))
        if n_valid < L:
            masked = max(masked, float(np.max(np.abs(w[..., ~mask]))))

        model = TextEncoderModel(30, d_model=8, n_heads=2, n_blocks=1, d_ff=16, max_len=24, seed=i)
        model.reinit(0.3, bias_std=0.1)
        n = int(rng.integers(1, 10))
        extra = int(rng.integers(1, 24 - n + 1))
        ids = np.concatenate([[2], rng.integers(4, 30, size=n - 1)]) if n > 1 else np.array([2])
        short_ids, short_mask = ids[None, :], np.ones((1, n), dtype=bool)
        long_ids = np.concatenate([ids, np.zeros(extra, dtype=int)])[None, :]
        long_mask = np.arange(n + extra)[None, :] < n
        a, _ = encoder_forward(model, short_ids, short_mask)
        b, _ = encoder_forward(model, long_ids, long_mask)
        drift = max(drift, float(np.max(np.abs(a - b))))
    return {"row_sum_error": row_err, "masked_weight": masked, "pad_drift": drift}


def garch_oracle_error() -> float:
    """Difference between the library and a hand-written two-term likelihood."""
    p = GarchParams(mu=0.1, alpha0=0.2, alpha1=0.3, beta1=0.4)
    r = np.array([0.5, -0.7])
    s1 = 1.5
    e1, e2 = r - p.mu
    s2 = p.alpha0 + p.alpha1 * e1**2 + p.beta1 * s1
    hand = sum(-0.5 * (np.log(2 * np.pi) + np.log(s) + e * e / s) for s, e in ((s1, e1), (s2, e2)))
    path = garch_filter(p, r, s1)
    return max(abs(garch_log_likelihood(p, r, s1) - hand), abs(path[1] - s2))


def run_checks(quick: bool = False) -> list[CheckResult]:
    """All self-checks; ``quick`` uses fewer random draws."""
    scale = 5 if quick else 1
    att = attention_invariants(100 // scale)
    return [
        CheckResult("lstm_gradient", lstm_gradient_error(100 // scale), 1e-4),
        CheckResult("text_regression_gradient", text_gradient_error("regression", 20 // scale), 1e-4),
        CheckResult("text_masked_gradient", text_gradient_error("masked", 20 // scale), 1e-4),
        CheckResult("attention_row_sums", att["row_sum_error"], 1e-12),
        CheckResult("attention_masked_weight", att["masked_weight"], 1e-12),
        CheckResult("attention_pad_drift", att["pad_drift"], 1e-10),
        CheckResult("garch_likelihood_oracle", garch_oracle_error(), 1e-10),
    ]
