"""Price CSV and news JSONL readers/writers."""

from __future__ import annotations

import csv
import datetime as dt
import json
from pathlib import Path
from typing import Iterable

from ..series import PriceSeries
from ..text.news import NewsItem

DATE_COLUMNS = ("date", "datetime", "day")
CLOSE_COLUMNS = ("close", "price", "adj close", "close/last", "last")
DATE_FORMATS = ("%Y-%m-%d", "%b %d, %Y", "%B %d, %Y", "%m/%d/%Y")


class DataError(ValueError):
    """Malformed input file; ``where`` names the offending row or line."""

    def __init__(self, message: str, path=None, where: int | None = None):
        self.path = str(path) if path is not None else None
        self.where = where
        super().__init__(message)


def parse_date(text: str) -> dt.date:
    text = text.strip().strip('"')
    for fmt in DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise ValueError(f"unrecognized date {text!r}")


def parse_number(text: str) -> float:
    cleaned = text.strip().strip('"').replace(",", "").replace("$", "")
    if not cleaned:
        raise ValueError("empty number")
    return float(cleaned)


def _find_column(header: list[str], names: Iterable[str]) -> int | None:
    norm = [h.strip().strip('"').lstrip("﻿").lower() for h in header]
    for name in names:
        if name in norm:
            return norm.index(name)
    return None


def load_prices(path) -> PriceSeries:
    """Read a daily close-price CSV with a header row.

    Needs a date column and a close/price column. Dates may be ISO
    (``2020-12-31``) or ``Dec 31, 2020``; numbers may carry quotes and
    thousands separators. Rows come back sorted oldest first. Row numbers in
    errors count file lines, the header being row 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file", path) from None
        di = _find_column(header, DATE_COLUMNS)
        ci = _find_column(header, CLOSE_COLUMNS)
        if di is None or ci is None:
            missing = "date" if di is None else "close/price"
            raise DataError(f"{path}: missing required {missing} column", path, 1)
        rows = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                if max(di, ci) >= len(row):
                    raise ValueError("too few columns")
                date = parse_date(row[di])
                close = parse_number(row[ci])
            except ValueError as exc:
                raise DataError(f"{path}: row {line}: {exc}", path, line) from None
            if not close > 0:
                raise DataError(f"{path}: row {line}: non-positive close {close}", path, line)
            rows.append((date, close, line))
    if not rows:
        raise DataError(f"{path}: no data rows", path)
    rows.sort(key=lambda r: r[0])
    for prev, cur in zip(rows, rows[1:]):
        if prev[0] == cur[0]:
            raise DataError(
                f"{path}: row {cur[2]}: duplicate date {cur[0].isoformat()}", path, cur[2]
            )
    return PriceSeries(tuple(r[0] for r in rows), [r[1] for r in rows])


def parse_timestamp(text: str) -> dt.datetime:
    """RFC 3339 timestamp; a trailing ``Z`` means UTC, a missing offset is taken as UTC."""
    if not isinstance(text, str):
        raise ValueError("timestamp must be a string")
    ts = dt.datetime.fromisoformat(text.strip().replace("Z", "+00:00").replace("z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts


def load_news(path) -> list[NewsItem]:
    """Read JSONL news: one object per line with ``timestamp``, ``source``, ``text``."""
    path = Path(path)
    items = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record is not a JSON object")
                for key in ("timestamp", "source", "text"):
                    if key not in obj:
                        raise ValueError(f'missing field "{key}"')
                if not isinstance(obj["source"], str) or not isinstance(obj["text"], str):
                    raise ValueError("source and text must be strings")
                items.append(NewsItem(parse_timestamp(obj["timestamp"]), obj["source"], obj["text"]))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}", path, lineno) from None
    return items


def write_prices(prices: PriceSeries, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Date", "Close"])
        for date, close in zip(prices.dates, prices.closes):
            writer.writerow([date.isoformat(), f"{close:.2f}"])


def write_news(news: Iterable[NewsItem], path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for item in news:
            fh.write(json.dumps(item.to_json(), sort_keys=False) + "\n")


def load_corpus(path) -> list[str]:
    """Plain-text domain corpus, one sentence per non-blank line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip()]


def write_corpus(corpus: Iterable[str], path) -> None:
    Path(path).write_text("".join(f"{line}\n" for line in corpus), encoding="utf-8")
