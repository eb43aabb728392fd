"""Benchmark harness: ingestion, model runs, report and plot files."""

from .config import BenchConfig
from .io import DataError, load_news, load_prices
from .plots import emit_plots
from .report import emit_report, load_report
from .runner import BenchmarkReport, ModelEntry, run_benchmark

__all__ = [
    "BenchConfig",
    "BenchmarkReport",
    "DataError",
    "ModelEntry",
    "emit_plots",
    "emit_report",
    "load_news",
    "load_prices",
    "load_report",
    "run_benchmark",
]
