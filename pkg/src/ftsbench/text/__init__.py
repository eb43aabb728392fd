"""Desk-scale transformer text regressor with masked-token domain adaptation."""

from .encoder import (
    TextEncoderModel,
    encoder_forward,
    layer_norm,
    mlm_loss_and_grads,
    regression_loss_and_grads,
    scaled_dot_attention,
)
from .news import DailyPrediction, DayRecord, NewsItem, align_news_to_days, predict_daily
from .training import masked_loss, predict_sequences, pretrain_masked, train_text_regressor
from .vocab import MASK_ID, Vocab, TokenSequence, build_vocab, tokenize

__all__ = [
    "DailyPrediction",
    "DayRecord",
    "MASK_ID",
    "NewsItem",
    "TextEncoderModel",
    "TokenSequence",
    "Vocab",
    "align_news_to_days",
    "build_vocab",
    "encoder_forward",
    "layer_norm",
    "masked_loss",
    "mlm_loss_and_grads",
    "predict_daily",
    "predict_sequences",
    "pretrain_masked",
    "regression_loss_and_grads",
    "scaled_dot_attention",
    "tokenize",
    "train_text_regressor",
]
