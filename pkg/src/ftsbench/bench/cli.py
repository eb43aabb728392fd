"""Command-line entry point: ``run``, ``gen-fixture`` and ``check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .config import BenchConfig
from .io import DataError, write_corpus, write_news, write_prices
from .plots import emit_plots
from .report import emit_report
from .runner import run_benchmark

FIXTURE_PACKAGE = "ftsbench.data.fixture"


def bundled_fixture_config() -> Path:
    """Path of the config.json that ships with the package fixture."""
    return Path(str(resources.files(FIXTURE_PACKAGE).joinpath("config.json")))


def _build_config(args) -> BenchConfig:
    if args.config and args.fixture:
        raise ValueError("--config and --fixture are mutually exclusive")
    if args.fixture:
        cfg = BenchConfig.load(bundled_fixture_config())
    elif args.config:
        cfg = BenchConfig.load(args.config)
    else:
        cfg = BenchConfig()
    for key in ("prices", "news", "corpus", "out", "seed"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if args.models is not None:
        cfg.models = [m.strip() for m in args.models.split(",") if m.strip()]
    if args.record_wall_time:
        cfg.record_wall_time = True
    return cfg


def cmd_run(args) -> int:
    cfg = _build_config(args)
    report = run_benchmark(cfg)
    paths = emit_report(report, cfg.out)
    paths += emit_plots(report.returns, report.histories, cfg.out)
    for e in sorted(report.entries, key=lambda e: (e.rmse, e.name)):
        print(f"{e.name:8s} rmse {e.rmse:.6g}")
    for note in report.notices:
        print(f"note: {note}")
    print(f"wrote {len(paths)} files to {cfg.out}")
    return 0


def cmd_gen_fixture(args) -> int:
    from ..synth import gen_text_fixture

    fx = gen_text_fixture(args.days, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_prices(fx.prices, out / "prices.csv")
    write_news(fx.news, out / "news.jsonl")
    write_corpus(fx.corpus, out / "corpus.txt")
    (out / "manifest.json").write_text(json.dumps(fx.manifest, indent=2) + "\n", encoding="utf-8")
    config = {"prices": "prices.csv", "news": "news.jsonl", "corpus": "corpus.txt", "seed": 42}
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"wrote fixture ({len(fx.prices)} days, {len(fx.news)} news items) to {out}")
    return 0


def cmd_check(args) -> int:
    from ..selfcheck import run_checks

    results = run_checks(quick=args.quick)
    for r in results:
        print(json.dumps(r.to_dict()))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise RuntimeError("self-check failed: " + ", ".join(failed))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftsbench", description="Return-forecasting benchmark harness.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark and write report and plot files")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--fixture", action="store_true", help="use the bundled synthetic fixture")
    run.add_argument("--prices", help="price CSV (overrides the config)")
    run.add_argument("--news", help="news JSONL (overrides the config)")
    run.add_argument("--corpus", help="plain-text pretraining corpus, one sentence per line")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int, help="global seed")
    run.add_argument("--models", help="comma-separated subset of arima,garch,lstm,bert,finbert")
    run.add_argument("--record-wall-time", action="store_true", help="store timings in report files")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen-fixture", help="write a synthetic price/news fixture")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--days", type=int, default=500, help="number of trading days")
    gen.add_argument("--seed", type=int, default=0, help="generator seed")
    gen.set_defaults(func=cmd_gen_fixture)

    check = sub.add_parser("check", help="gradient and invariant self-tests")
    check.add_argument("--quick", action="store_true", help="fewer random draws")
    check.set_defaults(func=cmd_check)
    return parser


def _error_object(exc: BaseException) -> dict:
    err = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, DataError):
        if exc.path is not None:
            err["path"] = str(exc.path)
        if exc.where is not None:
            err["line"] = exc.where
    elif isinstance(exc, OSError) and exc.filename is not None:
        err["message"] = exc.strerror or str(exc)
        err["path"] = str(exc.filename)
    return err


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(json.dumps(_error_object(exc)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
