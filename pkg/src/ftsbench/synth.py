"""Seeded synthetic fixtures: ARMA and GARCH paths, sine waves, headline corpora.

Every generator draws from ``numpy.random.Generator(PCG64(seed))`` so streams
are reproducible across platforms and numpy releases that keep PCG64.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

BURN_IN = 200


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _check_roots(coefs, what: str) -> None:
    coefs = np.asarray(coefs, dtype=np.float64)
    if len(coefs) and np.any(coefs):
        roots = np.roots(np.concatenate([[1.0], -coefs])[::-1])
        if np.any(np.abs(roots) <= 1.0):
            raise ValueError(f"{what} polynomial has roots on or inside the unit circle")


def gen_arma(
    n: int,
    phi=(),
    theta=(),
    c: float = 0.0,
    sigma: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Simulate ``y_t = c + sum phi_i y_{t-i} - sum theta_j e_{t-j} + e_t``.

    Shocks are Gaussian with standard deviation ``sigma``; the first
    ``BURN_IN`` draws are discarded.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    _check_roots(phi, "AR")
    _check_roots(theta, "MA")
    p, q = len(phi), len(theta)
    total = n + BURN_IN
    eps = make_rng(seed).standard_normal(total) * sigma
    y = np.zeros(total)
    for t in range(total):
        val = c + eps[t]
        for i in range(1, min(p, t) + 1):
            val += phi[i - 1] * y[t - i]
        for j in range(1, min(q, t) + 1):
            val -= theta[j - 1] * eps[t - j]
        y[t] = val
    return y[BURN_IN:]


def gen_garch(
    n: int,
    alpha0: float,
    alpha1: float,
    beta1: float,
    mu: float = 0.0,
    seed: int = 0,
    return_sigma2: bool = False,
):
    """Simulate a GARCH(1,1) return path with standard normal innovations."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha0 <= 0 or alpha1 < 0 or beta1 < 0:
        raise ValueError("need alpha0 > 0 and alpha1, beta1 >= 0")
    if alpha1 + beta1 >= 1:
        raise ValueError("alpha1 + beta1 must be < 1 for a stationary path")
    total = n + BURN_IN
    z = make_rng(seed).standard_normal(total)
    sigma2 = np.empty(total)
    eps = np.empty(total)
    sigma2[0] = alpha0 / (1.0 - alpha1 - beta1)
    eps[0] = np.sqrt(sigma2[0]) * z[0]
    for t in range(1, total):
        sigma2[t] = alpha0 + alpha1 * eps[t - 1] ** 2 + beta1 * sigma2[t - 1]
        eps[t] = np.sqrt(sigma2[t]) * z[t]
    r = mu + eps[BURN_IN:]
    if return_sigma2:
        return r, sigma2[BURN_IN:]
    return r


def gen_sine(n: int, period: float = 20.0, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    return amplitude * np.sin(2.0 * np.pi * t / period + phase)


SUBJECTS = (
    "stocks", "wall street", "the s&p 500", "the dow", "tech shares",
    "us equities", "the market", "blue chips", "index futures", "bank stocks",
)
POSITIVE_WORDS = (
    "surges", "soars", "jumps", "rallies", "climbs", "rebounds", "gains", "advances",
    "spikes", "rockets", "leaps", "booms", "skyrockets", "firms", "perks", "zooms",
)
NEGATIVE_WORDS = (
    "plunges", "tumbles", "slumps", "sinks", "drops", "slides", "falls", "plummets",
    "crashes", "retreats", "sheds", "dives", "slips", "skids", "sags", "craters",
)
NEUTRAL_WORDS = ("holds", "steadies", "drifts", "hovers", "pauses", "idles", "churns", "wavers")
POSITIVE_CONTEXT = (
    "as earnings beat forecasts", "on strong jobs data", "after upbeat guidance",
    "as the fed signals support", "on trade deal optimism", "as investors cheer stimulus",
)
NEGATIVE_CONTEXT = (
    "as earnings miss forecasts", "on weak jobs data", "after grim guidance",
    "as recession fears mount", "on trade war worries", "as investors flee risk",
)
NEUTRAL_CONTEXT = (
    "ahead of the fed meeting", "in quiet trading", "as traders await data",
    "before the holiday weekend", "as volumes thin out", "with earnings season ahead",
)
SOURCES = ("CNBC", "Bloomberg", "Yahoo Finance")


@dataclass(frozen=True)
class TextFixture:
    prices: "PriceSeries"
    news: list
    manifest: dict
    corpus: list = ()


def _weekdays(start: dt.date, n: int) -> list[dt.date]:
    out, day = [], start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def _drifting_choice(rng, words, frac: float, width: float = 0.12) -> str:
    # word k is most common around time fraction k / (K - 1), so the wording
    # of the late (test) period is rarely seen early on
    centers = np.linspace(0.0, 1.0, len(words))
    w = np.exp(-(((frac - centers) / width) ** 2))
    return words[int(rng.choice(len(words), p=w / w.sum()))]


def gen_text_fixture(
    n_days: int,
    seed: int = 0,
    kappa: float = 0.008,
    sigma: float = 0.008,
    drift: float = 0.0003,
    start: dt.date = dt.date(2019, 1, 2),
    context_prob: float = 0.3,
    corpus_size: int = 1500,
) -> TextFixture:
    """Random-walk index prices plus dated headlines carrying a planted signal.

    Each trading day gets a sentiment ``s`` in {-1, 0, +1}; its headlines use a
    matching verb (``surges`` family, ``plunges`` family or a neutral verb)
    and, with probability ``context_prob``, a matching context clause. The
    next trading day's simple return is ``drift + kappa * s + sigma * z``. The
    preferred verbs shift slowly over time, so late headlines mostly use words
    that are rare early on. Some days have no news and some items are stamped
    on weekends.

    ``corpus`` is an undated, unlabeled set of financial sentences in which
    every verb appears next to a context clause of the same polarity; it is
    the domain text for masked-token pretraining.
    """
    from .series import PriceSeries
    from .text.news import NewsItem

    if n_days < 10:
        raise ValueError("n_days must be >= 10")
    rng = make_rng(seed)
    days = _weekdays(start, n_days)
    sentiment = rng.choice([-1, 0, 1], size=n_days, p=[0.35, 0.3, 0.35])
    noise = rng.standard_normal(n_days)
    returns = np.zeros(n_days)
    returns[1:] = drift + kappa * sentiment[:-1] + sigma * noise[1:]
    closes = 3000.0 * np.cumprod(1.0 + returns)
    closes = np.round(closes, 2)

    families = {1: (POSITIVE_WORDS, POSITIVE_CONTEXT), -1: (NEGATIVE_WORDS, NEGATIVE_CONTEXT),
                0: (NEUTRAL_WORDS, NEUTRAL_CONTEXT)}
    news = []
    for t, day in enumerate(days[:-1]):
        if rng.random() < 0.08:
            continue
        n_items = int(rng.integers(1, 4))
        words, contexts = families[int(sentiment[t])]
        for _ in range(n_items):
            subject = SUBJECTS[int(rng.integers(len(SUBJECTS)))]
            verb = _drifting_choice(rng, words, t / (n_days - 1))
            text = f"{subject} {verb}"
            if rng.random() < context_prob:
                text += " " + contexts[int(rng.integers(len(contexts)))]
            stamp_day = day
            # a Monday item may be published over the weekend
            if day.weekday() == 0 and rng.random() < 0.3:
                stamp_day = day - dt.timedelta(days=int(rng.integers(1, 3)))
            minute = int(rng.integers(7 * 60, 15 * 60))
            ts = dt.datetime.combine(stamp_day, dt.time(minute // 60, minute % 60), tzinfo=dt.timezone.utc)
            source = SOURCES[int(rng.integers(len(SOURCES)))]
            news.append(NewsItem(ts, source, text))

    corpus = []
    for _ in range(corpus_size):
        words, contexts = families[int(rng.choice([-1, 0, 1]))]
        subject = SUBJECTS[int(rng.integers(len(SUBJECTS)))]
        verb = words[int(rng.integers(len(words)))]
        corpus.append(f"{subject} {verb} {contexts[int(rng.integers(len(contexts)))]}")

    realized = (closes[1:] / closes[:-1]) - 1.0
    s = sentiment[:-1].astype(float)
    manifest = {
        "seed": seed,
        "n_days": n_days,
        "kappa": kappa,
        "sigma": sigma,
        "drift": drift,
        "signal_correlation": float(np.corrcoef(s, realized)[0, 1]),
        "n_news": len(news),
        "n_corpus": len(corpus),
        "context_prob": context_prob,
        "rng": "numpy PCG64",
    }
    return TextFixture(PriceSeries(tuple(days), closes), news, manifest, corpus)
