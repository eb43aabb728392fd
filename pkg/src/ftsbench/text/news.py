"""News items, trading-day alignment and per-day bag predictions."""

from __future__ import annotations

import bisect
import datetime as dt
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .encoder import TextEncoderModel, encoder_forward
from .vocab import Vocab, stack, tokenize


@dataclass(frozen=True)
class NewsItem:
    timestamp: dt.datetime
    source: str
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("news item text is empty")
        if not isinstance(self.timestamp, dt.datetime):
            raise TypeError("timestamp must be a datetime")

    def to_json(self) -> dict:
        ts = self.timestamp
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=dt.timezone.utc)
        text = ts.astimezone(dt.timezone.utc).isoformat().replace("+00:00", "Z")
        return {"timestamp": text, "source": self.source, "text": self.text}


@dataclass(frozen=True)
class DayRecord:
    """All news mapped onto one trading day; ``items`` is empty on quiet days."""

    date: dt.date
    items: tuple[NewsItem, ...] = field(default=())

    @property
    def empty(self) -> bool:
        return not self.items


@dataclass(frozen=True)
class DailyPrediction:
    date: dt.date
    value: float
    carried: bool = False


def align_news_to_days(news: Sequence[NewsItem], calendar: Sequence[dt.date]) -> list[DayRecord]:
    """Map each item to the first trading day on or after its (UTC) calendar date.

    Returns one record per calendar day, in calendar order.
    """
    days = sorted(calendar)
    if not days:
        raise ValueError("trading calendar is empty")
    bags: dict[dt.date, list[NewsItem]] = {d: [] for d in days}
    for item in sorted(news, key=lambda it: it.timestamp):
        ts = item.timestamp
        if ts.tzinfo is not None:
            ts = ts.astimezone(dt.timezone.utc)
        k = bisect.bisect_left(days, ts.date())
        if k == len(days):
            raise ValueError(
                f"news item at {item.timestamp.isoformat()} falls after the last "
                f"trading day {days[-1].isoformat()}"
            )
        bags[days[k]].append(item)
    return [DayRecord(d, tuple(bags[d])) for d in days]


def predict_daily(
    model: TextEncoderModel,
    record: DayRecord,
    vocab: Vocab,
    previous: DailyPrediction | None = None,
) -> DailyPrediction:
    """Mean of per-item encoder predictions; an empty day carries ``previous`` forward."""
    if record.empty:
        if previous is None:
            raise ValueError(f"no news on {record.date.isoformat()} and no previous prediction")
        return DailyPrediction(record.date, previous.value, carried=True)
    seqs = [tokenize(item.text, vocab, model.max_len) for item in record.items]
    ids, mask = stack(seqs)
    preds, _ = encoder_forward(model, ids, mask)
    return DailyPrediction(record.date, float(np.mean(preds)))
