"""Whitespace vocabulary and fixed-length token sequences."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

PAD, UNK, CLS, MASK = "[PAD]", "[UNK]", "[CLS]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, MASK)
PAD_ID, UNK_ID, CLS_ID, MASK_ID = range(4)

_PUNCT = re.compile(r"[^\w\s]+")


def normalize(text: str) -> list[str]:
    """Lowercase, drop punctuation, split on whitespace."""
    return _PUNCT.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if self.tokens[:4] != SPECIALS:
            raise ValueError(f"vocabulary must start with {SPECIALS}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def save(self, path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> Vocab:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(tuple(line for line in lines if line))


def build_vocab(corpus: Iterable[str], min_freq: int = 1, max_size: int = 5000) -> Vocab:
    """Frequency-ordered vocabulary (ties broken alphabetically) after the specials.

    ``max_size`` counts the four special tokens.
    """
    counts = Counter()
    for text in corpus:
        counts.update(normalize(text))
    for special in SPECIALS:
        counts.pop(special.lower(), None)
    if not counts:
        raise ValueError("empty corpus after normalization")
    kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocab(SPECIALS + tuple(kept[: max(0, max_size - len(SPECIALS))]))


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray
    mask: np.ndarray
    length: int

    def __len__(self) -> int:
        return len(self.ids)


def tokenize(text: str, vocab: Vocab, max_len: int = 64) -> TokenSequence:
    """``[CLS]`` + token ids, truncated to ``max_len`` and padded with ``[PAD]``."""
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    ids = [CLS_ID] + [vocab.id(t) for t in normalize(text)]
    ids = ids[:max_len]
    length = len(ids)
    arr = np.full(max_len, PAD_ID, dtype=np.int64)
    arr[:length] = ids
    mask = np.zeros(max_len, dtype=np.int8)
    mask[:length] = 1
    return TokenSequence(arr, mask, length)


def stack(seqs: list[TokenSequence], trim: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Batch token sequences into (B, L) id and mask arrays.

    With ``trim`` the trailing all-padding columns are dropped; masked
    positions do not influence unmasked outputs, so this only saves work.
    """
    ids = np.stack([s.ids for s in seqs])
    mask = np.stack([s.mask for s in seqs]).astype(bool)
    if trim:
        width = max(s.length for s in seqs)
        ids, mask = ids[:, :width], mask[:, :width]
    return ids, mask
