"""Run every enabled model under one split and score it with test RMSE."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import arima, garch, lstm
from ..history import TrainingHistory
from ..series import ReturnSeries, compute_returns, rmse, train_test_split
from ..text import (
    DailyPrediction,
    NewsItem,
    TextEncoderModel,
    align_news_to_days,
    build_vocab,
    predict_daily,
    pretrain_masked,
    tokenize,
    train_text_regressor,
)
from .config import TEXT_MODELS, BenchConfig, TextConfig
from .io import load_corpus, load_news, load_prices

logger = logging.getLogger(__name__)


@dataclass
class ModelEntry:
    name: str
    rmse: float
    summary: dict
    wall_time_s: float | None = None
    warnings: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rmse": self.rmse,
            "wall_time_s": self.wall_time_s,
            "metrics": self.metrics,
            "warnings": list(self.warnings),
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ModelEntry:
        return cls(d["name"], d["rmse"], d["summary"], d["wall_time_s"], list(d["warnings"]), d["metrics"])


@dataclass
class BenchmarkReport:
    """Results of one benchmark run.

    ``histories`` maps trained models to their loss curves. ``returns`` and
    ``timings`` are kept for plotting and logging only and are not part of
    the serialized report.
    """

    entries: list[ModelEntry]
    protocol: dict
    config_hash: str
    seed: int
    notices: list[str] = field(default_factory=list)
    histories: dict[str, TrainingHistory] = field(default_factory=dict)
    returns: ReturnSeries | None = field(default=None, compare=False, repr=False)
    timings: dict[str, float] = field(default_factory=dict, compare=False, repr=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BenchmarkReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def entry(self, name: str) -> ModelEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "protocol": self.protocol,
            "models": [e.to_dict() for e in self.entries],
            "notices": list(self.notices),
            "histories": {k: h.to_dict() for k, h in self.histories.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkReport:
        histories = {
            k: TrainingHistory(
                [_num(x) for x in h["train_loss"]], [_num(x) for x in h["val_loss"]], h["diverged"]
            )
            for k, h in d["histories"].items()
        }
        return cls(
            entries=[ModelEntry.from_dict(e) for e in d["models"]],
            protocol=d["protocol"],
            config_hash=d["config_hash"],
            seed=d["seed"],
            notices=list(d["notices"]),
            histories=histories,
        )


def _plain(obj):
    """Convert numpy scalars, tuples and NaN into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def _num(x):
    return float("nan") if x is None else x


def _dates(series: ReturnSeries) -> list[str]:
    return [series.dates[0].isoformat(), series.dates[-1].isoformat()]


class _Skip(Exception):
    pass


def _run_arima(cfg: BenchConfig, split, full: np.ndarray):
    a = cfg.arima
    best, fits = arima.select_order(
        split.train.values, p_max=a.p_max, d_max=a.d_max, q_max=a.q_max, criterion=a.criterion
    )
    fit = fits[best]
    preds = arima.forecast_one_step(fit, full, len(split.test))
    grid = [
        {"order": [o.p, o.d, o.q], "aic": f.aic, "bic": f.bic, "mse": f.mse}
        for o, f in sorted(fits.items(), key=lambda kv: (kv[0].d, kv[0].p, kv[0].q))
    ]
    summary = fit.summary()
    summary["criterion"] = a.criterion
    summary["grid"] = grid
    return preds, summary, list(fit.warnings), {}, None


def _run_garch(cfg: BenchConfig, split, full: np.ndarray):
    fit = garch.fit_garch(split.train.values, max_iter=cfg.garch.max_iter)
    mu = fit.params.mu
    preds = np.full(len(split.test), mu)
    metrics = {}
    if cfg.garch.score_volatility:
        h = garch.one_step_variance(fit, full, len(split.test))
        test = split.test.values
        metrics["volatility_rmse"] = rmse(np.sqrt(h), np.abs(test - mu))
        metrics["volatility_qlike"] = garch.qlike(h, test, mu)
    warns = [] if fit.converged else ["optimizer hit its iteration limit"]
    return preds, fit.summary(), warns, metrics, None


def _run_lstm(cfg: BenchConfig, split, full: np.ndarray):
    c = cfg.lstm
    seed = cfg.model_seed("lstm")
    n_train = len(split.train)
    if n_train <= c.lookback:
        raise _Skip(f"training span of {n_train} returns is not longer than lookback {c.lookback}")
    scaler = lstm.MinMaxScaler.fit(split.train.values)
    train_w = lstm.make_windows(split.train.values, c.lookback, scaler)
    test_w = lstm.make_windows(full[n_train - c.lookback :], c.lookback, scaler)
    net = lstm.LstmNetwork.init(lookback=c.lookback, hidden1=c.hidden1, hidden2=c.hidden2, seed=seed)
    net, hist = lstm.train_lstm(net, train_w, test_w, epochs=c.epochs, lr=c.lr, batch_size=c.batch_size, seed=seed)
    preds = lstm.forecast_lstm(net, full, len(split.test), scaler)
    summary = {
        "lookback": c.lookback,
        "hidden": [c.hidden1, c.hidden2],
        "n_params": net.n_params,
        "epochs": hist.epochs,
        "final_train_loss": hist.train_loss[-1],
        "final_val_loss": hist.val_loss[-1],
        "scaler": {"lo": scaler.lo, "hi": scaler.hi},
    }
    warns = ["training diverged; kept last finite parameters"] if hist.diverged else []
    return preds, summary, warns, {}, hist


@dataclass
class TextData:
    """Tokenized (item, next-day return) pairs for the text models."""

    vocab: object
    train: tuple[list, list]
    test: tuple[list, list]
    test_records: list
    corpus: list
    corpus_source: str


def prepare_text_data(t: TextConfig, news: list[NewsItem], corpus_texts: list[str] | None, prices, split) -> TextData:
    """Align news to trading days and tokenize train/test items and the corpus.

    The vocabulary comes from training-span news plus the corpus. Without a
    corpus, masked pretraining falls back to the training-span news text.
    """
    calendar = list(prices.dates)
    records = align_news_to_days(news, calendar)
    n_train = len(split.train)
    # the news of trading day k is paired with the return from day k to day k + 1
    train_texts = [(it.text, split.train.values[k]) for k in range(n_train) for it in records[k].items]
    test_texts = [
        (it.text, split.test.values[k - n_train])
        for k in range(n_train, n_train + len(split.test))
        for it in records[k].items
    ]
    if not train_texts:
        raise _Skip("no news in the training span")
    if corpus_texts:
        corpus_source = "corpus file"
    else:
        corpus_texts = [text for text, _ in train_texts]
        corpus_source = "training-span news"
    vocab = build_vocab([text for text, _ in train_texts] + list(corpus_texts), t.min_freq, t.max_vocab)

    def encode(pairs):
        return [tokenize(text, vocab, t.max_len) for text, _ in pairs], [y for _, y in pairs]

    return TextData(
        vocab=vocab,
        train=encode(train_texts),
        test=encode(test_texts),
        test_records=records[n_train : n_train + len(split.test)],
        corpus=[tokenize(text, vocab, t.max_len) for text in corpus_texts],
        corpus_source=corpus_source,
    )


def fit_text_model(t: TextConfig, data: TextData, seed: int, pretrain: bool):
    """Optionally pretrain, fine-tune, then predict each test day.

    Returns ``(predictions, summary, warnings, metrics, history)``.
    """
    model = TextEncoderModel(
        len(data.vocab), d_model=t.d_model, n_heads=t.n_heads, n_blocks=t.n_blocks,
        d_ff=t.d_ff, max_len=t.max_len, seed=seed,
    )
    summary = {
        "vocab_size": len(data.vocab),
        "d_model": t.d_model,
        "n_heads": t.n_heads,
        "n_blocks": t.n_blocks,
        "n_params": model.n_params,
        "n_train_items": len(data.train[0]),
        "n_test_items": len(data.test[0]),
    }
    warns = []
    if pretrain:
        model, pre_hist = pretrain_masked(
            model, data.corpus, t.mask_prob, epochs=t.pretrain_epochs, lr=t.pretrain_lr,
            batch_size=t.batch_size, seed=seed,
        )
        summary["pretrain"] = {
            "source": data.corpus_source,
            "n_sentences": len(data.corpus),
            "epochs": pre_hist.epochs,
            "first_loss": pre_hist.train_loss[0],
            "final_loss": pre_hist.train_loss[-1],
        }
        if pre_hist.diverged:
            warns.append("masked pretraining diverged; kept last finite parameters")
    val = data.test if data.test[0] else None
    model, hist = train_text_regressor(
        model, data.train, val, epochs=t.epochs, lr=t.lr, batch_size=t.batch_size, seed=seed
    )
    if hist.diverged:
        warns.append("fine-tuning diverged; kept last finite parameters")
    preds, prev, carried, fallback = [], None, 0, 0
    for rec in data.test_records:
        if rec.empty and prev is None:
            prev = DailyPrediction(rec.date, model.y_mean, carried=True)
            fallback += 1
        dp = predict_daily(model, rec, data.vocab, prev)
        carried += dp.carried
        preds.append(dp.value)
        prev = dp
    if carried:
        warns.append(f"{carried} test day(s) without news carried the previous prediction")
    if fallback:
        warns.append("first test day had no news; used the training mean")
    summary.update(
        epochs=hist.epochs,
        final_train_loss=hist.train_loss[-1],
        final_val_loss=hist.val_loss[-1],
    )
    return np.asarray(preds), summary, warns, {}, hist


_RUNNERS = {"arima": _run_arima, "garch": _run_garch, "lstm": _run_lstm}


def run_benchmark(config: BenchConfig) -> BenchmarkReport:
    """Load data, split chronologically, run each enabled model and score it.

    Text models are skipped with a notice when no news is configured. A model
    that cannot run on the given data (e.g. too few points) is also reported
    as a notice; if no model produces a result the run fails.
    """
    config.validate()
    prices = load_prices(config.prices)
    if len(prices) < 3:
        raise ValueError("price series too short for any model")
    returns = compute_returns(prices, config.return_kind)
    split = train_test_split(returns, config.train_fraction)
    full = np.asarray(returns.values, dtype=np.float64)
    protocol = {
        "n_prices": len(prices),
        "n_returns": len(returns),
        "train_fraction": config.train_fraction,
        "n_train": len(split.train),
        "n_test": len(split.test),
        "train_dates": _dates(split.train),
        "test_dates": _dates(split.test),
        "return_kind": config.return_kind,
    }

    notices: list[str] = []
    news = None
    text_data = None
    wants_text = [m for m in config.models if m in TEXT_MODELS]
    if wants_text:
        if config.news is None:
            notices.extend(f"{m}: skipped: no news" for m in wants_text)
        else:
            news = load_news(config.news)
            last = prices.dates[-1]
            late = [it for it in news if it.timestamp.date() > last]
            if late:
                notices.append(f"{len(late)} news item(s) dated after {last.isoformat()} ignored")
                news = [it for it in news if it.timestamp.date() <= last]
            corpus = load_corpus(config.corpus) if config.corpus else None
            try:
                text_data = prepare_text_data(config.text, news, corpus, prices, split)
            except _Skip as exc:
                notices.extend(f"{m}: skipped: {exc}" for m in wants_text)

    entries, histories, timings = [], {}, {}
    for name in config.models:
        if name in TEXT_MODELS and text_data is None:
            continue
        start = time.perf_counter()
        try:
            if name in TEXT_MODELS:
                out = fit_text_model(config.text, text_data, config.model_seed(name), name == "finbert")
            else:
                out = _RUNNERS[name](config, split, full)
        except _Skip as exc:
            notices.append(f"{name}: skipped: {exc}")
            continue
        except ValueError as exc:
            logger.warning("%s failed: %s", name, exc)
            notices.append(f"{name}: failed: {exc}")
            continue
        preds, summary, warns, metrics, hist = out
        elapsed = time.perf_counter() - start
        timings[name] = elapsed
        score = float(rmse(preds, split.test.values))
        if not math.isfinite(score):
            notices.append(f"{name}: failed: non-finite RMSE")
            continue
        entries.append(
            ModelEntry(
                name=name,
                rmse=score,
                summary=_plain(summary),
                wall_time_s=elapsed if config.record_wall_time else None,
                warnings=warns,
                metrics=_plain(metrics),
            )
        )
        if hist is not None:
            histories[name] = hist
        logger.info("%s: rmse %.6g (%.1f s)", name, score, elapsed)

    if not entries:
        raise ValueError("no model produced a result: " + "; ".join(notices))
    return BenchmarkReport(
        entries=entries,
        protocol=protocol,
        config_hash=config.config_hash(),
        seed=int(config.seed),
        notices=notices,
        histories=histories,
        returns=returns,
        timings=timings,
    )
