"""End-to-end run on the bundled fixture, writing report and plot files.

Equivalent to ``ftsbench run --fixture --seed 42 --out demo_out``. Expect
around a minute and a half on a laptop.
"""

import sys

from ftsbench.bench import BenchConfig, emit_plots, emit_report, run_benchmark
from ftsbench.bench.cli import bundled_fixture_config

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
cfg = BenchConfig.load(bundled_fixture_config())
cfg.out = out
report = run_benchmark(cfg)

p = report.protocol
print(f"{p['n_returns']} returns: train {p['train_dates'][0]}..{p['train_dates'][1]} ({p['n_train']}), "
      f"test {p['test_dates'][0]}..{p['test_dates'][1]} ({p['n_test']})")
for e in sorted(report.entries, key=lambda e: e.rmse):
    extra = ""
    if e.name == "arima":
        extra = f"order {tuple(e.summary['order'])}"
    elif e.name == "garch":
        extra = f"volatility rmse {e.metrics['volatility_rmse']:.5f}"
    print(f"  {e.name:8s} {e.rmse:.6f}  {extra}")

files = emit_report(report, out) + emit_plots(report.returns, report.histories, out)
print(f"wrote {', '.join(f.name for f in files)}")
