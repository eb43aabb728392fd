"""From-scratch return-forecasting models and a benchmark harness.

Submodules: ``series`` (types, returns, split, RMSE), ``numerics`` (simplex
search, Adam, finite differences), ``arima``, ``garch``, ``lstm``, ``text``
(transformer encoder regressor), ``synth`` (seeded generators) and ``bench``
(ingestion, runner, report files, CLI).
"""

from .series import PriceSeries, ReturnSeries, SplitSeries, compute_returns, difference, rmse, train_test_split

__version__ = "0.1.0"

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "SplitSeries",
    "compute_returns",
    "difference",
    "rmse",
    "train_test_split",
]
