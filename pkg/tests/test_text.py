import datetime as dt
import math

import numpy as np
import pytest

from ftsbench.numerics import check_gradient, finite_diff_gradient
from ftsbench.selfcheck import attention_invariants, text_gradient_error
from ftsbench.text import (
    DailyPrediction,
    DayRecord,
    NewsItem,
    TextEncoderModel,
    Vocab,
    align_news_to_days,
    build_vocab,
    encoder_forward,
    layer_norm,
    masked_loss,
    predict_daily,
    pretrain_masked,
    regression_loss_and_grads,
    scaled_dot_attention,
    tokenize,
    train_text_regressor,
)
from ftsbench.text.training import mask_tokens
from ftsbench.text.vocab import CLS_ID, MASK_ID, PAD_ID, UNK_ID, SPECIALS, normalize, stack

HEADLINES = [
    "stocks surge on earnings",
    "bank shares plunge",
    "oil rallies after report",
    "tech slumps on rates",
    "retail gains modestly",
    "miners drop sharply",
    "markets flat ahead of fed",
    "bonds climb as yields ease",
    "energy tumbles on supply",
    "chipmakers soar on demand",
]
RETURNS = np.array([0.02, -0.03, 0.015, -0.01, 0.005, -0.025, 0.0, 0.01, -0.02, 0.03])


def small_model(vocab_size, **kw):
    args = dict(d_model=16, n_heads=2, n_blocks=1, d_ff=32, max_len=16, seed=0)
    args.update(kw)
    return TextEncoderModel(vocab_size, **args)


# vocabulary and tokenization


def test_build_vocab_orders_by_frequency():
    v = build_vocab(["up up down"])
    assert v.tokens == SPECIALS + ("up", "down")


def test_build_vocab_min_freq():
    assert build_vocab(["up up down"], min_freq=2).tokens == SPECIALS + ("up",)


def test_build_vocab_ties_are_alphabetical():
    assert build_vocab(["b a c"]).tokens[4:] == ("a", "b", "c")


def test_build_vocab_deterministic():
    corpus = ["Stocks rally; bonds slide.", "stocks slip"]
    assert build_vocab(corpus) == build_vocab(list(corpus))


def test_build_vocab_max_size_counts_specials():
    v = build_vocab(["a b c d e f"], max_size=6)
    assert len(v) == 6


@pytest.mark.parametrize("corpus", [[], ["", "!!! ..."]])
def test_build_vocab_empty_raises(corpus):
    with pytest.raises(ValueError):
        build_vocab(corpus)


def test_reserved_ids():
    assert (PAD_ID, UNK_ID, CLS_ID, MASK_ID) == (0, 1, 2, 3)
    with pytest.raises(ValueError):
        Vocab(("a", "b"))


def test_vocab_save_load_roundtrip(tmp_path):
    v = build_vocab(HEADLINES)
    v.save(tmp_path / "vocab.txt")
    assert Vocab.load(tmp_path / "vocab.txt") == v
    assert (tmp_path / "vocab.txt").read_text().splitlines()[:4] == list(SPECIALS)


def test_normalize_strips_punctuation():
    assert normalize("Stocks UP!  S&P, flat.") == ["stocks", "up", "s", "p", "flat"]


def test_tokenize_example():
    v = build_vocab(["stocks up"])
    seq = tokenize("Stocks UP!", v, max_len=6)
    assert seq.ids.tolist() == [CLS_ID, v.id("stocks"), v.id("up"), PAD_ID, PAD_ID, PAD_ID]
    assert seq.mask.tolist() == [1, 1, 1, 0, 0, 0]
    assert seq.length == 3


def test_tokenize_truncates():
    v = build_vocab(["w"])
    seq = tokenize(" ".join(["w"] * 500), v, max_len=64)
    assert len(seq) == 64
    assert seq.mask.all()


def test_tokenize_empty_text():
    seq = tokenize("", build_vocab(["x"]), max_len=5)
    assert seq.ids.tolist() == [CLS_ID, 0, 0, 0, 0]
    assert seq.mask.tolist() == [1, 0, 0, 0, 0]


def test_tokenize_unknown_word():
    seq = tokenize("zebra", build_vocab(["x"]), max_len=4)
    assert seq.ids[1] == UNK_ID


def test_tokenize_rejects_short_max_len():
    with pytest.raises(ValueError):
        tokenize("a", build_vocab(["a"]), max_len=1)


def test_stack_trims_padding_columns():
    v = build_vocab(HEADLINES)
    ids, mask = stack([tokenize("stocks surge", v, 16), tokenize("bank", v, 16)])
    assert ids.shape == (2, 3)
    assert mask.tolist() == [[True, True, True], [True, True, False]]


# attention and layer norm


def test_attention_constant_row_is_uniform():
    L = 5
    Q = np.zeros((L, 4))
    K = np.ones((L, 4))
    V = np.arange(L * 2, dtype=float).reshape(L, 2)
    out, w = scaled_dot_attention(Q, K, V)
    np.testing.assert_allclose(w, 1.0 / L, atol=1e-15)
    np.testing.assert_allclose(out, np.tile(V.mean(axis=0), (L, 1)), atol=1e-12)


def test_attention_matches_direct_softmax(rng):
    Q, K, V = (rng.normal(size=(4, 3)) for _ in range(3))
    s = Q @ K.T / math.sqrt(3)
    e = np.exp(s - s.max(axis=1, keepdims=True))
    w_ref = e / e.sum(axis=1, keepdims=True)
    out, w = scaled_dot_attention(Q, K, V)
    np.testing.assert_allclose(w, w_ref, atol=1e-14)
    np.testing.assert_allclose(out, w_ref @ V, atol=1e-14)


def test_attention_masked_key_gets_zero(rng):
    Q, K, V = (rng.normal(size=(4, 3)) * 10 for _ in range(3))
    _, w = scaled_dot_attention(Q, K, V, np.array([True, True, False, False]))
    assert np.abs(w[:, 2:]).max() < 1e-12
    assert np.abs(w.sum(axis=1) - 1).max() < 1e-12


def test_attention_dimension_mismatch():
    with pytest.raises(ValueError):
        scaled_dot_attention(np.zeros((3, 2)), np.zeros((3, 4)), np.zeros((3, 2)))


def test_attention_invariants_small_run():
    inv = attention_invariants(instances=20, seed=3)
    assert inv["row_sum_error"] < 1e-12
    assert inv["masked_weight"] < 1e-12
    assert inv["pad_drift"] < 1e-10


def test_layer_norm_properties(rng):
    x = rng.normal(size=(50, 32)) * rng.uniform(0.01, 100, size=(50, 1)) + 7.0
    _, xhat, _ = layer_norm(x)
    assert np.abs(xhat.mean(axis=-1)).max() < 1e-10
    assert np.abs(xhat.var(axis=-1) - 1).max() < 1e-6


# encoder


def test_model_rejects_indivisible_heads():
    with pytest.raises(ValueError):
        TextEncoderModel(10, d_model=10, n_heads=3)


def test_zero_params_give_head_bias(rng):
    model = small_model(20)
    for arr in model.params.values():
        arr[...] = 0.0
    model.params["reg_b"][0] = 0.123
    ids = rng.integers(4, 20, size=(5, 10))
    ids[:, 0] = CLS_ID
    pred, _ = encoder_forward(model, ids, np.ones_like(ids, dtype=bool))
    np.testing.assert_array_equal(pred, 0.123)


def test_pad_extension_is_inert():
    v = build_vocab(HEADLINES)
    model = small_model(len(v), max_len=32)
    model.reinit(0.3, bias_std=0.1)
    a, pa = encoder_forward(model, tokenize(HEADLINES[0], v, 8))
    b, pb = encoder_forward(model, tokenize(HEADLINES[0], v, 32))
    assert abs(a - b) < 1e-10
    assert np.abs(pa - pb).max() < 1e-10


def test_forward_rejects_bad_ids():
    model = small_model(10)
    with pytest.raises(ValueError):
        encoder_forward(model, np.array([[2, 10]]), np.array([[1, 1]]))
    with pytest.raises(ValueError):
        encoder_forward(model, np.full((1, 17), 2), np.ones((1, 17)))


def test_forward_single_and_batch_agree():
    v = build_vocab(HEADLINES)
    model = small_model(len(v))
    model.reinit(0.2)
    seqs = [tokenize(h, v, 16) for h in HEADLINES[:3]]
    batch, pooled = encoder_forward(model, seqs)
    assert pooled.shape == (3, 16)
    for k, s in enumerate(seqs):
        assert encoder_forward(model, s)[0] == pytest.approx(batch[k], abs=1e-12)


def test_regression_gradient_small():
    assert text_gradient_error("regression", draws=3, seed=5) < 1e-4


def test_masked_gradient_small():
    assert text_gradient_error("masked", draws=3, seed=5) < 1e-4


def test_gradient_with_target_scaling():
    v = build_vocab(HEADLINES)
    model = small_model(len(v))
    model.reinit(0.3, bias_std=0.1)
    model.y_mean, model.y_scale = 0.001, 0.02
    ids, mask = stack([tokenize(h, v, 16) for h in HEADLINES[:4]])
    y = RETURNS[:4]
    _, grads = regression_loss_and_grads(model, ids, mask, y)
    probe = model.copy()

    def f(flat):
        probe.set_flat(flat)
        return regression_loss_and_grads(probe, ids, mask, y, need_grad=False)[0]

    fd = finite_diff_gradient(f, model.get_flat(), 1e-4)
    assert check_gradient(model.flatten_grads(grads), fd) < 1e-4


# training


def test_overfit_ten_headlines():
    v = build_vocab(HEADLINES)
    seqs = [tokenize(h, v, 16) for h in HEADLINES]
    model, hist = train_text_regressor(small_model(len(v)), (seqs, RETURNS), epochs=300, lr=3e-3, batch_size=None)
    assert hist.train_loss[-1] < 1e-3
    # relative to the target variance as well, so the check is not trivial
    assert hist.train_loss[-1] < 1e-3 * RETURNS.var()
    assert len(hist.train_loss) == 300


def test_training_is_deterministic():
    v = build_vocab(HEADLINES)
    seqs = [tokenize(h, v, 16) for h in HEADLINES]
    runs = [
        train_text_regressor(small_model(len(v)), (seqs, RETURNS), (seqs[:3], RETURNS[:3]), epochs=5, batch_size=4, seed=9)
        for _ in range(2)
    ]
    assert runs[0][1].train_loss == runs[1][1].train_loss
    assert runs[0][1].val_loss == runs[1][1].val_loss
    np.testing.assert_array_equal(runs[0][0].get_flat(), runs[1][0].get_flat())


def test_training_does_not_touch_input_model():
    v = build_vocab(HEADLINES)
    seqs = [tokenize(h, v, 16) for h in HEADLINES]
    model = small_model(len(v))
    before = model.get_flat()
    train_text_regressor(model, (seqs, RETURNS), epochs=2)
    np.testing.assert_array_equal(model.get_flat(), before)


def test_training_stores_target_scaling():
    v = build_vocab(HEADLINES)
    seqs = [tokenize(h, v, 16) for h in HEADLINES]
    model, _ = train_text_regressor(small_model(len(v)), (seqs, RETURNS), epochs=1)
    assert model.y_mean == pytest.approx(RETURNS.mean())
    assert model.y_scale == pytest.approx(RETURNS.std())


def test_freeze_keeps_embeddings():
    v = build_vocab(HEADLINES)
    seqs = [tokenize(h, v, 16) for h in HEADLINES]
    model = small_model(len(v))
    out, _ = train_text_regressor(model, (seqs, RETURNS), epochs=3, freeze=("E", "P"))
    np.testing.assert_array_equal(out.params["E"], model.params["E"])
    assert not np.array_equal(out.params["reg_w"], model.params["reg_w"])
    with pytest.raises(KeyError):
        train_text_regressor(model, (seqs, RETURNS), epochs=1, freeze=("nope",))


def test_training_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train_text_regressor(small_model(10), ([], []), epochs=1)


# masked pretraining

TOY_WORDS = "the market rose as the bank cut rates and the index fell when oil prices jumped".split()
TOY_CORPUS = ([" ".join(TOY_WORDS[i : i + 10]) for i in range(len(TOY_WORDS) - 9)] * 3)[:20]  # 200 tokens


def toy_setup():
    v = build_vocab(TOY_CORPUS)
    seqs = [tokenize(s, v, 16) for s in TOY_CORPUS]
    return v, seqs


def test_initial_masked_loss_near_log_vocab():
    v, seqs = toy_setup()
    model = TextEncoderModel(len(v), d_model=32, n_heads=2, n_blocks=1, d_ff=64, max_len=16, seed=0)
    loss = masked_loss(model, seqs, seed=1)
    assert abs(loss - math.log(len(v))) < 0.2 * math.log(len(v))


def test_toy_corpus_overfits():
    v, seqs = toy_setup()
    assert sum(s.length - 1 for s in seqs) == 200
    model = TextEncoderModel(len(v), d_model=32, n_heads=2, n_blocks=1, d_ff=64, max_len=16, seed=0)
    model, _ = pretrain_masked(model, seqs, epochs=1000, lr=3e-3, batch_size=None, seed=0)
    losses = [masked_loss(model, seqs, seed=s) for s in range(3)]
    assert np.mean(losses) < 0.1


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
def test_mask_prob_out_of_range_raises(p):
    _, seqs = toy_setup()
    with pytest.raises(ValueError):
        pretrain_masked(small_model(30), seqs, mask_prob=p, epochs=1)


def test_pretrain_rejects_empty_corpus():
    v = build_vocab(["a"])
    with pytest.raises(ValueError):
        pretrain_masked(small_model(len(v)), [tokenize("", v, 8)], epochs=1)


def test_mask_tokens_skips_specials(rng):
    ids = np.array([[CLS_ID, 5, 6, 7, PAD_ID], [CLS_ID, UNK_ID, 8, PAD_ID, PAD_ID]])
    mask = ids != PAD_ID
    for _ in range(20):
        corrupted, chosen = mask_tokens(ids, mask, 0.5, rng)
        assert chosen.any()
        assert not chosen[:, 0].any()
        assert not chosen[~mask].any()
        np.testing.assert_array_equal(corrupted[chosen], MASK_ID)
        np.testing.assert_array_equal(corrupted[~chosen], ids[~chosen])


def test_pretrain_loss_decreases_over_windows():
    from ftsbench.synth import gen_text_fixture

    corpus = gen_text_fixture(100, seed=0).corpus[:300]
    v = build_vocab(corpus)
    seqs = [tokenize(s, v, 32) for s in corpus]
    model = TextEncoderModel(len(v), d_model=16, n_heads=2, n_blocks=1, d_ff=32, max_len=32, seed=0)
    _, hist = pretrain_masked(model, seqs, epochs=40, lr=3e-3, batch_size=32, seed=0)
    windows = np.array(hist.train_loss).reshape(-1, 10).mean(axis=1)
    assert np.all(np.diff(windows) < 0)


# news alignment and daily predictions


def item(ts, text="markets move", source="CNBC"):
    return NewsItem(ts, source, text)


CAL = [dt.date(2020, 1, 3), dt.date(2020, 1, 6), dt.date(2020, 1, 7)]  # Fri, Mon, Tue


def test_news_item_validation():
    with pytest.raises(ValueError):
        item(dt.datetime(2020, 1, 3), text="  ")


def test_weekend_item_maps_to_monday():
    recs = align_news_to_days([item(dt.datetime(2020, 1, 4, 15, 0))], CAL)
    assert [len(r.items) for r in recs] == [0, 1, 0]
    assert recs[1].date == dt.date(2020, 1, 6)
    assert recs[0].empty and recs[2].empty


def test_same_day_items_form_bag():
    news = [item(dt.datetime(2020, 1, 7, 9)), item(dt.datetime(2020, 1, 7, 16), "later")]
    recs = align_news_to_days(news, CAL)
    assert len(recs) == 3
    assert [i.text for i in recs[2].items] == ["markets move", "later"]


def test_timezone_aware_items_use_utc_date():
    tz = dt.timezone(dt.timedelta(hours=-5))
    # 21:00 on Jan 5 at UTC-5 is Jan 6 in UTC
    recs = align_news_to_days([item(dt.datetime(2020, 1, 5, 21, tzinfo=tz))], CAL)
    assert len(recs[1].items) == 1


def test_item_after_calendar_end_raises():
    with pytest.raises(ValueError, match="after the last trading day"):
        align_news_to_days([item(dt.datetime(2020, 1, 8))], CAL)


def test_empty_calendar_raises():
    with pytest.raises(ValueError):
        align_news_to_days([], [])


def fixed_output_model(v, value):
    model = small_model(len(v))
    for arr in model.params.values():
        arr[...] = 0.0
    model.params["reg_b"][0] = value
    return model


def test_predict_daily_single_item_matches_forward():
    v = build_vocab(HEADLINES)
    model = small_model(len(v))
    model.reinit(0.3, bias_std=0.1)
    rec = DayRecord(dt.date(2020, 1, 6), (item(dt.datetime(2020, 1, 6), HEADLINES[2]),))
    expected, _ = encoder_forward(model, tokenize(HEADLINES[2], v, model.max_len))
    assert predict_daily(model, rec, v).value == pytest.approx(expected, abs=1e-14)


def test_predict_daily_mean_of_bag():
    v = build_vocab(HEADLINES)
    model = small_model(len(v))
    model.reinit(0.3, bias_std=0.1)
    texts = (HEADLINES[0], HEADLINES[1])
    preds = [encoder_forward(model, tokenize(t, v, model.max_len))[0] for t in texts]
    rec = DayRecord(dt.date(2020, 1, 6), tuple(item(dt.datetime(2020, 1, 6), t) for t in texts))
    out = predict_daily(model, rec, v)
    assert out.value == pytest.approx(np.mean(preds), abs=1e-14)
    assert not out.carried


def test_predict_daily_mean_example(monkeypatch):
    import ftsbench.text.news as news_mod

    v = build_vocab(HEADLINES)
    monkeypatch.setattr(news_mod, "encoder_forward", lambda m, ids, mask: (np.array([0.01, 0.03]), None))
    rec = DayRecord(dt.date(2020, 1, 6), (item(dt.datetime(2020, 1, 6)), item(dt.datetime(2020, 1, 6, 12))))
    assert predict_daily(small_model(len(v)), rec, v).value == pytest.approx(0.02, abs=1e-15)


def test_predict_daily_carry_forward():
    v = build_vocab(HEADLINES)
    model = fixed_output_model(v, 0.5)
    prev = DailyPrediction(dt.date(2020, 1, 3), 0.01)
    out = predict_daily(model, DayRecord(dt.date(2020, 1, 6)), v, previous=prev)
    assert out == DailyPrediction(dt.date(2020, 1, 6), 0.01, carried=True)


def test_predict_daily_empty_first_day_raises():
    v = build_vocab(HEADLINES)
    with pytest.raises(ValueError):
        predict_daily(fixed_output_model(v, 0.0), DayRecord(dt.date(2020, 1, 6)), v)
