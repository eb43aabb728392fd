"""Adam training loops for the encoder: regression fine-tuning and masked-token pretraining."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from ..history import TrainingHistory
from ..numerics import AdamState, adam_step
from .encoder import TextEncoderModel, encoder_forward, mlm_loss_and_grads, regression_loss_and_grads
from .vocab import MASK_ID, UNK_ID, TokenSequence, stack

logger = logging.getLogger(__name__)


def _batches(n: int, batch_size: int | None, rng: np.random.Generator):
    if batch_size is None or batch_size >= n:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield np.sort(order[start : start + batch_size])


def predict_sequences(model: TextEncoderModel, seqs: Sequence[TokenSequence], chunk: int = 512) -> np.ndarray:
    out = []
    for start in range(0, len(seqs), chunk):
        ids, mask = stack(list(seqs[start : start + chunk]))
        out.append(encoder_forward(model, ids, mask)[0])
    return np.concatenate(out) if out else np.empty(0)


def _trainable_mask(model: TextEncoderModel, freeze: Sequence[str]) -> np.ndarray:
    unknown = set(freeze) - set(model.params)
    if unknown:
        raise KeyError(f"cannot freeze unknown parameters {sorted(unknown)}")
    return np.concatenate(
        [np.full(a.size, 0.0 if k in freeze else 1.0) for k, a in model.params.items()]
    )


def train_text_regressor(
    model: TextEncoderModel,
    train: tuple[Sequence[TokenSequence], Sequence[float]],
    val: tuple[Sequence[TokenSequence], Sequence[float]] | None = None,
    epochs: int = 30,
    lr: float = 1e-3,
    batch_size: int | None = 32,
    seed: int | None = None,
    freeze: Sequence[str] = (),
) -> tuple[TextEncoderModel, TrainingHistory]:
    """Fine-tune the regression head and encoder on (tokens, next-day return) pairs.

    Targets are standardized with the training mean and standard deviation,
    which are stored on the returned model. History losses are MSE in return
    units. Parameter tensors named in ``freeze`` (e.g. ``("E", "P")``) keep
    their values.
    """
    seqs, targets = list(train[0]), np.asarray(train[1], dtype=np.float64)
    if not seqs:
        raise ValueError("empty dataset")
    if len(seqs) != len(targets):
        raise ValueError("tokens and targets differ in length")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    model = model.copy()
    model.y_mean = float(targets.mean())
    model.y_scale = float(targets.std()) or 1.0
    rng = np.random.Generator(np.random.PCG64(model.seed if seed is None else seed))
    ids_all, mask_all = stack(seqs, trim=False)
    flat = model.get_flat()
    state = AdamState.zeros(flat.size, lr=lr)
    history = TrainingHistory()
    trainable = _trainable_mask(model, freeze)

    def mse(data) -> float:
        pred = predict_sequences(model, list(data[0]))
        return float(np.mean((pred - np.asarray(data[1], dtype=np.float64)) ** 2))

    for epoch in range(epochs):
        last_good = flat.copy()
        try:
            for idx in _batches(len(seqs), batch_size, rng):
                ids, mask = ids_all[idx], mask_all[idx].astype(bool)
                width = int(mask.sum(axis=1).max())
                loss, grads = regression_loss_and_grads(model, ids[:, :width], mask[:, :width], targets[idx])
                if not np.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                flat, state = adam_step(flat, model.flatten_grads(grads) * trainable, state)
                model.set_flat(flat)
            train_mse = mse((seqs, targets))
            if not np.isfinite(train_mse):
                raise FloatingPointError("non-finite loss")
        except (FloatingPointError, ValueError) as exc:
            logger.warning("regressor training diverged at epoch %d: %s", epoch + 1, exc)
            model.set_flat(last_good)
            history.diverged = True
            break
        history.train_loss.append(train_mse)
        history.val_loss.append(mse(val) if val is not None and len(val[0]) else float("nan"))
    return model, history


def mask_tokens(ids: np.ndarray, mask: np.ndarray, mask_prob: float, rng: np.random.Generator):
    """Replace a ``mask_prob`` share of ordinary tokens with ``[MASK]``.

    Returns ``(corrupted_ids, target_mask)``. At least one position is masked
    whenever the batch has any ordinary token.
    """
    eligible = mask.astype(bool) & ((ids > MASK_ID) | (ids == UNK_ID))
    chosen = eligible & (rng.random(ids.shape) < mask_prob)
    if not chosen.any() and eligible.any():
        flat = np.flatnonzero(eligible)
        chosen.flat[flat[rng.integers(len(flat))]] = True
    corrupted = ids.copy()
    corrupted[chosen] = MASK_ID
    return corrupted, chosen


def pretrain_masked(
    model: TextEncoderModel,
    corpus: Sequence[TokenSequence],
    mask_prob: float = 0.15,
    epochs: int = 20,
    lr: float = 1e-3,
    batch_size: int | None = 32,
    seed: int | None = None,
) -> tuple[TextEncoderModel, TrainingHistory]:
    """Continued masked-token training; history holds the mean masked cross-entropy.

    A fresh mask is drawn for every batch. The validation column of the
    history is left as NaN.
    """
    seqs = [s for s in corpus if s.length > 1]
    if not seqs:
        raise ValueError("empty corpus")
    if not 0.0 < mask_prob < 1.0:
        raise ValueError("mask_prob must lie in (0, 1)")
    if model.vocab_size <= MASK_ID:
        raise ValueError("vocabulary lacks the [MASK] token")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    model = model.copy()
    rng = np.random.Generator(np.random.PCG64((model.seed if seed is None else seed) + 7919))
    ids_all, mask_all = stack(seqs, trim=False)
    flat = model.get_flat()
    state = AdamState.zeros(flat.size, lr=lr)
    history = TrainingHistory()
    for epoch in range(epochs):
        last_good = flat.copy()
        total, count = 0.0, 0
        try:
            for idx in _batches(len(seqs), batch_size, rng):
                ids, mask = ids_all[idx], mask_all[idx].astype(bool)
                width = int(mask.sum(axis=1).max())
                ids, mask = ids[:, :width], mask[:, :width]
                corrupted, chosen = mask_tokens(ids, mask, mask_prob, rng)
                if not chosen.any():
                    continue
                loss, grads = mlm_loss_and_grads(model, corrupted, mask, ids, chosen)
                if not np.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                flat, state = adam_step(flat, model.flatten_grads(grads), state)
                model.set_flat(flat)
                total += loss * int(chosen.sum())
                count += int(chosen.sum())
        except (FloatingPointError, ValueError) as exc:
            logger.warning("masked pretraining diverged at epoch %d: %s", epoch + 1, exc)
            model.set_flat(last_good)
            history.diverged = True
            break
        history.train_loss.append(total / max(count, 1))
        history.val_loss.append(float("nan"))
    return model, history


def masked_loss(
    model: TextEncoderModel,
    corpus: Sequence[TokenSequence],
    mask_prob: float = 0.15,
    seed: int = 0,
) -> float:
    """Masked cross-entropy of ``model`` on ``corpus`` under one fixed random mask."""
    ids, mask = stack([s for s in corpus if s.length > 1])
    rng = np.random.Generator(np.random.PCG64(seed))
    corrupted, chosen = mask_tokens(ids, mask, mask_prob, rng)
    return mlm_loss_and_grads(model, corrupted, mask, ids, chosen, need_grad=False)[0]

