"""Small post-LN transformer encoder with regression and masked-token heads.

Forward and backward passes are written out by hand in numpy (float64). Each
block is

    X1 = LN(X + MHA(X));  X2 = LN(X1 + FFN(X1)),  FFN(x) = gelu(x W1 + b1) W2 + b2

The regression head reads the ``[CLS]`` position. The masked-token head
shares the token embedding matrix (logits = H E^T + b), as BERT does. The key
projection carries no bias: a key bias only shifts every logit in a softmax row
by the same amount, so its gradient is identically zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .vocab import PAD_ID, TokenSequence

LN_EPS = 1e-12
_GELU_C = math.sqrt(2.0 / math.pi)

BLOCK_KEYS = (
    "Wq", "bq", "Wk", "Wv", "bv", "Wo", "bo", "ln1_g", "ln1_b",
    "W1", "b1", "W2", "b2", "ln2_g", "ln2_b",
)


def gelu(x):
    x2 = x * x
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * x * (1.0 + 0.044715 * x2)))


def gelu_grad(x):
    x2 = x * x
    t = np.tanh(_GELU_C * x * (1.0 + 0.044715 * x2))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * x2)


def layer_norm(x, gamma=None, beta=None, eps: float = LN_EPS):
    """Normalize over the last axis. Returns ``(out, xhat, inv_std)``."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat if gamma is None else xhat * gamma + beta
    return out, xhat, inv


def _layer_norm_backward(dout, xhat, inv, gamma):
    dxhat = dout * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    axes = tuple(range(dout.ndim - 1))
    return dx, (dout * xhat).sum(axis=axes), dout.sum(axis=axes)


def scaled_dot_attention(Q, K, V, mask=None):
    """softmax(Q K^T / sqrt(d_k)) V with masked keys at -inf.

    ``mask`` is boolean (True keeps a key) and broadcasts against the
    ``(..., L_q, L_k)`` score array. Returns ``(outputs, weights)``.
    """
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    if Q.shape[-1] != K.shape[-1] or K.shape[-2] != V.shape[-2]:
        raise ValueError(f"inconsistent shapes Q{Q.shape} K{K.shape} V{V.shape}")
    scores = Q @ np.swapaxes(K, -1, -2) / math.sqrt(Q.shape[-1])
    if mask is not None:
        scores = np.where(np.asarray(mask, dtype=bool), scores, -np.inf)
    scores = scores - scores.max(axis=-1, keepdims=True)
    w = np.exp(scores)
    w /= w.sum(axis=-1, keepdims=True)
    return w @ V, w


@dataclass
class TextEncoderModel:
    vocab_size: int
    d_model: int = 32
    n_heads: int = 2
    n_blocks: int = 2
    d_ff: int = 64
    max_len: int = 64
    seed: int = 0
    params: dict[str, np.ndarray] = field(default_factory=dict)
    y_mean: float = 0.0
    y_scale: float = 1.0

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if not self.params:
            self.params = self._init_params(init_std=0.02)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        d, f = self.d_model, self.d_ff
        out = {"E": (self.vocab_size, d), "P": (self.max_len, d)}
        block = {
            "Wq": (d, d), "bq": (d,), "Wk": (d, d), "Wv": (d, d), "bv": (d,),
            "Wo": (d, d), "bo": (d,), "ln1_g": (d,), "ln1_b": (d,),
            "W1": (d, f), "b1": (f,), "W2": (f, d), "b2": (d,),
            "ln2_g": (d,), "ln2_b": (d,),
        }
        for i in range(self.n_blocks):
            for k in BLOCK_KEYS:
                out[f"{i}.{k}"] = block[k]
        out["reg_w"] = (d,)
        out["reg_b"] = (1,)
        out["mlm_b"] = (self.vocab_size,)
        return out

    def _init_params(self, init_std: float) -> dict[str, np.ndarray]:
        rng = np.random.Generator(np.random.PCG64(self.seed))
        params = {}
        for name, shape in self.shapes().items():
            key = name.split(".")[-1]
            if key.endswith("_g"):
                params[name] = np.ones(shape)
            elif key.startswith("b") or key.endswith("_b") or key in ("reg_b", "mlm_b"):
                params[name] = np.zeros(shape)
            else:
                params[name] = rng.normal(0.0, init_std, size=shape)
        return params

    def reinit(self, init_std: float, seed: int | None = None, bias_std: float = 0.0) -> None:
        """Redraw all weights at ``init_std`` (biases at ``bias_std``, LN gains at 1)."""
        if seed is not None:
            self.seed = seed
        self.params = self._init_params(init_std)
        if bias_std:
            rng = np.random.Generator(np.random.PCG64(self.seed + 1))
            for name, arr in self.params.items():
                key = name.split(".")[-1]
                if key.startswith("b") or key.endswith("_b") or key in ("reg_b", "mlm_b"):
                    arr[...] = rng.normal(0.0, bias_std, size=arr.shape)
                elif key.endswith("_g"):
                    arr[...] = 1.0 + rng.normal(0.0, bias_std, size=arr.shape)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.params.values()])

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        pos = 0
        for arr in self.params.values():
            arr[...] = flat[pos : pos + arr.size].reshape(arr.shape)
            pos += arr.size
        if pos != flat.size:
            raise ValueError("flat vector has the wrong length")

    def flatten_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[k].ravel() for k in self.params])

    def copy(self) -> TextEncoderModel:
        return TextEncoderModel(
            self.vocab_size, self.d_model, self.n_heads, self.n_blocks, self.d_ff,
            self.max_len, self.seed, {k: v.copy() for k, v in self.params.items()},
            self.y_mean, self.y_scale,
        )

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.params.values())


def _split_heads(x, h):
    B, L, d = x.shape
    return x.reshape(B, L, h, d // h).transpose(0, 2, 1, 3)


def _merge_heads(x):
    B, h, L, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, L, h * dk)


def _check_batch(model: TextEncoderModel, ids, mask):
    ids = np.atleast_2d(np.asarray(ids))
    mask = np.atleast_2d(np.asarray(mask)).astype(bool)
    if ids.shape != mask.shape:
        raise ValueError("ids and mask shapes differ")
    if ids.shape[1] > model.max_len:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds max_len {model.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= model.vocab_size):
        raise ValueError("token id out of vocabulary range")
    return ids, mask


def encode(model: TextEncoderModel, ids, mask):
    """Contextual token representations (B, L, d) and the backward cache."""
    ids, mask = _check_batch(model, ids, mask)
    P = model.params
    B, L = ids.shape
    h = model.n_heads
    x = P["E"][ids] + P["P"][:L]
    keymask = mask[:, None, None, :]
    caches = []
    for i in range(model.n_blocks):
        p = lambda k: P[f"{i}.{k}"]  # noqa: E731
        q = _split_heads(x @ p("Wq") + p("bq"), h)
        k = _split_heads(x @ p("Wk"), h)
        v = _split_heads(x @ p("Wv") + p("bv"), h)
        ctx, att = scaled_dot_attention(q, k, v, keymask)
        ctx_m = _merge_heads(ctx)
        r1 = x + ctx_m @ p("Wo") + p("bo")
        x1, xhat1, inv1 = layer_norm(r1, p("ln1_g"), p("ln1_b"))
        a = x1 @ p("W1") + p("b1")
        act = gelu(a)
        r2 = x1 + act @ p("W2") + p("b2")
        x2, xhat2, inv2 = layer_norm(r2, p("ln2_g"), p("ln2_b"))
        caches.append((x, q, k, v, att, ctx_m, x1, xhat1, inv1, a, act, xhat2, inv2))
        x = x2
    return x, (ids, mask, caches)


def encode_backward(model: TextEncoderModel, cache, dH) -> dict[str, np.ndarray]:
    P = model.params
    ids, mask, caches = cache
    B, L = ids.shape
    d = model.d_model
    dk = d // model.n_heads
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    dx = dH
    for i in range(model.n_blocks - 1, -1, -1):
        x, q, k, v, att, ctx_m, x1, xhat1, inv1, a, act, xhat2, inv2 = caches[i]
        p = lambda name: P[f"{i}.{name}"]  # noqa: E731
        g = lambda name: grads[f"{i}.{name}"]  # noqa: E731

        dr2, dg2, db2 = _layer_norm_backward(dx, xhat2, inv2, p("ln2_g"))
        g("ln2_g")[...] += dg2
        g("ln2_b")[...] += db2
        flat = dr2.reshape(-1, d)
        g("W2")[...] += act.reshape(-1, act.shape[-1]).T @ flat
        g("b2")[...] += flat.sum(axis=0)
        da = (dr2 @ p("W2").T) * gelu_grad(a)
        g("W1")[...] += x1.reshape(-1, d).T @ da.reshape(-1, da.shape[-1])
        g("b1")[...] += da.reshape(-1, da.shape[-1]).sum(axis=0)
        dx1 = dr2 + da @ p("W1").T

        dr1, dg1, db1 = _layer_norm_backward(dx1, xhat1, inv1, p("ln1_g"))
        g("ln1_g")[...] += dg1
        g("ln1_b")[...] += db1
        flat = dr1.reshape(-1, d)
        g("Wo")[...] += ctx_m.reshape(-1, d).T @ flat
        g("bo")[...] += flat.sum(axis=0)
        dctx = _split_heads(dr1 @ p("Wo").T, model.n_heads)

        datt = dctx @ np.swapaxes(v, -1, -2)
        dv = np.swapaxes(att, -1, -2) @ dctx
        ds = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
        ds /= math.sqrt(dk)
        dq = ds @ k
        dkk = np.swapaxes(ds, -1, -2) @ q
        dq, dkk, dv = _merge_heads(dq), _merge_heads(dkk), _merge_heads(dv)

        xf = x.reshape(-1, d)
        g("Wq")[...] += xf.T @ dq.reshape(-1, d)
        g("bq")[...] += dq.reshape(-1, d).sum(axis=0)
        g("Wk")[...] += xf.T @ dkk.reshape(-1, d)
        g("Wv")[...] += xf.T @ dv.reshape(-1, d)
        g("bv")[...] += dv.reshape(-1, d).sum(axis=0)
        dx = dr1 + dq @ p("Wq").T + dkk @ p("Wk").T + dv @ p("Wv").T

    np.add.at(grads["E"], ids, dx)
    grads["P"][:L] += dx.sum(axis=0)
    return grads


def regression_head(model: TextEncoderModel, H) -> np.ndarray:
    """Raw head output on the ``[CLS]`` position (standardized target units)."""
    return H[:, 0, :] @ model.params["reg_w"] + model.params["reg_b"][0]


def encoder_forward(model: TextEncoderModel, tokens, mask=None):
    """Predicted return(s) and pooled ``[CLS]`` vector(s).

    Accepts a :class:`TokenSequence`, a list of them, or raw ``(ids, mask)``
    arrays. Outputs are mapped from standardized units via ``y_mean`` and
    ``y_scale`` (0 and 1 for an untrained model).
    """
    single = isinstance(tokens, TokenSequence)
    if single:
        ids, mask = tokens.ids[None, :], tokens.mask[None, :]
    elif isinstance(tokens, (list, tuple)) and tokens and isinstance(tokens[0], TokenSequence):
        ids = np.stack([t.ids for t in tokens])
        mask = np.stack([t.mask for t in tokens])
    else:
        ids = tokens
    H, _ = encode(model, ids, mask)
    pred = regression_head(model, H) * model.y_scale + model.y_mean
    pooled = H[:, 0, :]
    if single:
        return float(pred[0]), pooled[0]
    return pred, pooled


def regression_loss_and_grads(model: TextEncoderModel, ids, mask, targets, need_grad: bool = True):
    """MSE in standardized units: ``mean((head - (y - y_mean) / y_scale)^2)``."""
    H, cache = encode(model, ids, mask)
    z = (np.asarray(targets, dtype=np.float64) - model.y_mean) / model.y_scale
    if len(z) == 0:
        raise ValueError("empty batch")
    err = regression_head(model, H) - z
    loss = float(np.mean(err * err))
    if not need_grad:
        return loss, None
    dpred = 2.0 * err / len(z)
    dH = np.zeros_like(H)
    dH[:, 0, :] = np.outer(dpred, model.params["reg_w"])
    grads = encode_backward(model, cache, dH)
    grads["reg_w"] += H[:, 0, :].T @ dpred
    grads["reg_b"] += dpred.sum()
    return loss, grads


def mlm_loss_and_grads(model: TextEncoderModel, ids, mask, target_ids, target_mask, need_grad: bool = True):
    """Mean cross-entropy over positions flagged in ``target_mask``.

    ``ids`` is the corrupted input, ``target_ids`` the original tokens.
    """
    H, cache = encode(model, ids, mask)
    sel = np.asarray(target_mask, dtype=bool)
    if not sel.any():
        raise ValueError("no masked positions to score")
    E, bias = model.params["E"], model.params["mlm_b"]
    hm = H[sel]
    logits = hm @ E.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    tgt = np.asarray(target_ids)[sel]
    m = len(tgt)
    loss = float(-logp[np.arange(m), tgt].mean())
    if not need_grad:
        return loss, None
    dlogits = np.exp(logp)
    dlogits[np.arange(m), tgt] -= 1.0
    dlogits /= m
    dH = np.zeros_like(H)
    dH[sel] = dlogits @ E
    grads = encode_backward(model, cache, dH)
    grads["E"] += dlogits.T @ hm
    grads["mlm_b"] += dlogits.sum(axis=0)
    return loss, grads
