import datetime as dt
import filecmp

import numpy as np
import pytest

from ftsbench.bench.cli import main
from ftsbench.bench.io import load_corpus, load_news, load_prices
from ftsbench.synth import (
    BURN_IN,
    NEGATIVE_WORDS,
    POSITIVE_WORDS,
    gen_arma,
    gen_garch,
    gen_sine,
    gen_text_fixture,
)
from ftsbench.text import align_news_to_days


def lag1_acf(x):
    x = x - x.mean()
    return float(x[1:] @ x[:-1] / (x @ x))


@pytest.mark.parametrize("n", [100, 1000, 10000])
def test_white_noise_mean_within_clt_bound(n):
    for seed in range(5):
        y = gen_arma(n, seed=seed)
        assert abs(y.mean()) < 3 / np.sqrt(n)


@pytest.mark.parametrize("seed", range(5))
def test_ar1_autocorrelation(seed):
    y = gen_arma(2000, phi=[0.6], seed=seed)
    assert abs(lag1_acf(y) - 0.6) < 0.05


def test_arma_matches_hand_recursion():
    n, c, sigma = 50, 0.1, 0.7
    y = gen_arma(n, phi=[0.5, -0.3], theta=[0.4], c=c, sigma=sigma, seed=3)
    eps = np.random.Generator(np.random.PCG64(3)).standard_normal(n + BURN_IN) * sigma
    ref = np.zeros(n + BURN_IN)
    for t in range(n + BURN_IN):
        ar = sum(phi * ref[t - i] for i, phi in ((1, 0.5), (2, -0.3)) if t - i >= 0)
        ma = 0.4 * eps[t - 1] if t >= 1 else 0.0
        ref[t] = c + ar - ma + eps[t]
    np.testing.assert_allclose(y, ref[BURN_IN:], rtol=0, atol=1e-12)


def test_arma_deterministic():
    a = gen_arma(300, phi=[0.5], theta=[0.2], seed=11)
    b = gen_arma(300, phi=[0.5], theta=[0.2], seed=11)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gen_arma(300, phi=[0.5], theta=[0.2], seed=12))


@pytest.mark.parametrize("phi,theta", [([1.0], []), ([1.2], []), ([0.5, 0.6], []), ([], [1.5])])
def test_arma_rejects_explosive(phi, theta):
    with pytest.raises(ValueError):
        gen_arma(100, phi=phi, theta=theta)


def test_arma_rejects_empty():
    with pytest.raises(ValueError):
        gen_arma(0)


def test_garch_iid_case_variance():
    r = gen_garch(5000, alpha0=0.4, alpha1=0.0, beta1=0.0, mu=0.2, seed=1)
    assert abs(r.var() - 0.4) < 0.1 * 0.4
    assert abs(r.mean() - 0.2) < 3 * np.sqrt(0.4 / 5000)


@pytest.mark.parametrize("seed", range(3))
def test_garch_unconditional_variance(seed):
    r = gen_garch(5000, 0.05, 0.10, 0.85, seed=seed)
    assert abs(r.var() - 1.0) < 0.15


def test_garch_sigma2_positive_and_consistent():
    r, s2 = gen_garch(1000, 0.05, 0.10, 0.85, mu=0.01, seed=4, return_sigma2=True)
    assert np.all(s2 > 0)
    eps = r - 0.01
    np.testing.assert_allclose(s2[1:], 0.05 + 0.10 * eps[:-1] ** 2 + 0.85 * s2[:-1], rtol=1e-12)


def test_garch_deterministic():
    np.testing.assert_array_equal(gen_garch(500, 0.1, 0.2, 0.7, seed=5), gen_garch(500, 0.1, 0.2, 0.7, seed=5))


@pytest.mark.parametrize("args", [(0.1, 0.5, 0.5), (0.1, 0.3, 0.8), (0.0, 0.1, 0.1), (0.1, -0.1, 0.5)])
def test_garch_rejects_bad_params(args):
    with pytest.raises(ValueError):
        gen_garch(100, *args)


def test_sine_values():
    s = gen_sine(40, period=20.0, amplitude=2.0)
    assert s[0] == 0.0
    assert s[5] == pytest.approx(2.0)
    assert s[15] == pytest.approx(-2.0)
    np.testing.assert_allclose(s[:20], s[20:], atol=1e-12)


# text fixture


def day_sentiment(text):
    words = set(text.split())
    if words & set(POSITIVE_WORDS):
        return 1
    if words & set(NEGATIVE_WORDS):
        return -1
    return 0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_positive_days_have_higher_next_day_return(seed):
    fx = gen_text_fixture(300, seed=seed)
    closes = fx.prices.closes
    records = align_news_to_days(fx.news, fx.prices.dates)
    pos, neg = [], []
    for k, rec in enumerate(records[:-1]):
        if rec.empty:
            continue
        nxt = closes[k + 1] / closes[k] - 1.0
        s = day_sentiment(rec.items[0].text)
        (pos if s > 0 else neg if s < 0 else []).append(nxt)
    assert len(pos) > 50 and len(neg) > 50
    assert np.mean(pos) > np.mean(neg)
    assert fx.manifest["signal_correlation"] > 0.3


def test_fixture_shapes():
    fx = gen_text_fixture(50, seed=2)
    assert len(fx.prices) == 50
    assert all(d.weekday() < 5 for d in fx.prices.dates)
    assert fx.manifest["n_news"] == len(fx.news)
    assert len(fx.corpus) == 1500
    assert fx.news[-1].timestamp.date() <= fx.prices.dates[-1]


def test_fixture_has_weekend_items():
    fx = gen_text_fixture(300, seed=0)
    assert any(it.timestamp.weekday() >= 5 for it in fx.news)


def test_fixture_rejects_tiny():
    with pytest.raises(ValueError):
        gen_text_fixture(9)


def test_fixture_roundtrips_through_loaders(tmp_path):
    assert main(["gen-fixture", "--out", str(tmp_path), "--days", "60", "--seed", "3"]) == 0
    fx = gen_text_fixture(60, seed=3)
    prices = load_prices(tmp_path / "prices.csv")
    assert prices.dates == fx.prices.dates
    np.testing.assert_array_equal(prices.closes, fx.prices.closes)
    assert load_news(tmp_path / "news.jsonl") == fx.news
    assert load_corpus(tmp_path / "corpus.txt") == list(fx.corpus)


def test_fixture_files_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["gen-fixture", "--out", str(out), "--days", "40", "--seed", "8"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["config.json", "corpus.txt", "manifest.json", "news.jsonl", "prices.csv"]
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert match == names and not mismatch and not errors


def test_fixture_timestamps_are_utc():
    fx = gen_text_fixture(30, seed=1)
    assert all(it.timestamp.utcoffset() == dt.timedelta(0) for it in fx.news)
