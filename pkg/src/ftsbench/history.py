from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class TrainingHistory:
    """Per-epoch training and validation loss (MSE unless stated otherwise)."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    diverged: bool = False

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(i + 1, t, v) for i, (t, v) in enumerate(zip(self.train_loss, self.val_loss))]

    def to_dict(self) -> dict:
        """Plain-JSON form; NaN (no validation data) becomes None."""
        return {
            "train_loss": [_opt(x) for x in self.train_loss],
            "val_loss": [_opt(x) for x in self.val_loss],
            "diverged": self.diverged,
        }


def _opt(x: float) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x
