"""Benchmark configuration: JSON file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

MODEL_NAMES = ("arima", "garch", "lstm", "bert", "finbert")
TEXT_MODELS = ("bert", "finbert")


@dataclass
class ArimaConfig:
    p_max: int = 5
    d_max: int = 1
    q_max: int = 5
    criterion: str = "aic"
    max_iter: int = 5000


@dataclass
class GarchConfig:
    max_iter: int = 4000
    score_volatility: bool = True


@dataclass
class LstmConfig:
    lookback: int = 20
    hidden1: int = 32
    hidden2: int = 16
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int | None = 32


@dataclass
class TextConfig:
    d_model: int = 32
    n_heads: int = 2
    n_blocks: int = 2
    d_ff: int = 64
    max_len: int = 64
    max_vocab: int = 5000
    min_freq: int = 1
    epochs: int = 20
    lr: float = 3e-4
    batch_size: int = 32
    pretrain_epochs: int = 40
    pretrain_lr: float = 3e-3
    mask_prob: float = 0.15


@dataclass
class BenchConfig:
    """Everything a benchmark run depends on.

    ``news`` and ``corpus`` are optional. Without news the two text models are
    skipped; without a corpus the domain-adapted model pretrains on the
    training-period news text. ``record_wall_time`` puts measured timings into
    the report itself, which makes report files differ between runs.
    """

    prices: str | None = None
    news: str | None = None
    corpus: str | None = None
    out: str = "bench_out"
    seed: int | None = None
    models: list[str] = field(default_factory=lambda: list(MODEL_NAMES))
    return_kind: str = "simple"
    train_fraction: float = 0.75
    record_wall_time: bool = False
    arima: ArimaConfig = field(default_factory=ArimaConfig)
    garch: GarchConfig = field(default_factory=GarchConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    text: TextConfig = field(default_factory=TextConfig)

    def validate(self) -> None:
        if self.prices is None:
            raise ValueError("config has no price path")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.return_kind not in ("simple", "log"):
            raise ValueError(f"unknown return kind {self.return_kind!r}")
        if not self.models:
            raise ValueError("no models enabled")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise ValueError(f"unknown model(s): {', '.join(unknown)}")
        if len(set(self.models)) != len(self.models):
            raise ValueError("model listed twice")
        if self.seed is None:
            raise ValueError("a seed is required to run the benchmark")
        if self.arima.criterion not in ("aic", "bic", "mse"):
            raise ValueError(f"unknown ARIMA criterion {self.arima.criterion!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring the output directory."""
        data = self.to_dict()
        data.pop("out")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def model_seed(self, name: str) -> int:
        """Per-model stream seed: global seed XOR a stable tag of the model name."""
        if self.seed is None:
            raise ValueError("seed not set")
        return (int(self.seed) ^ zlib.crc32(name.encode())) & 0xFFFFFFFF

    @classmethod
    def from_dict(cls, data: dict) -> BenchConfig:
        data = dict(data)
        sections = {"arima": ArimaConfig, "garch": GarchConfig, "lstm": LstmConfig, "text": TextConfig}
        kwargs = {}
        top = {f.name for f in dataclasses.fields(cls)}
        for key, value in data.items():
            if key not in top:
                raise ValueError(f"unknown config field {key!r}")
            if key in sections:
                names = {f.name for f in dataclasses.fields(sections[key])}
                bad = set(value) - names
                if bad:
                    raise ValueError(f"unknown {key} field(s): {', '.join(sorted(bad))}")
                kwargs[key] = sections[key](**value)
            else:
                kwargs[key] = value
        if isinstance(kwargs.get("models"), str):
            kwargs["models"] = [m.strip() for m in kwargs["models"].split(",") if m.strip()]
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> BenchConfig:
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = cls.from_dict(data)
        # relative data paths are taken relative to the config file
        for key in ("prices", "news", "corpus"):
            value = getattr(cfg, key)
            if value is not None and not Path(value).is_absolute():
                setattr(cfg, key, str(path.parent / value))
        return cfg
