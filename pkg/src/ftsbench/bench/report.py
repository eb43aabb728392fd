"""Report files: full JSON structure and a sorted RMSE table."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .runner import BenchmarkReport


def _cell(x) -> str:
    # repr keeps every digit, so the CSV text equals the JSON number
    return "" if x is None else repr(float(x))


def emit_report(report: BenchmarkReport, out_dir) -> list[Path]:
    """Write report.json and summary.csv (rows sorted by RMSE, smallest first).

    Measured timings go to timings.json, which is the only output that is
    expected to differ between identical runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    paths.append(path)

    path = out / "summary.csv"
    rows = sorted(report.entries, key=lambda e: (e.rmse, e.name))
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "rmse", "wall_time_s"])
        for e in rows:
            writer.writerow([e.name, _cell(e.rmse), _cell(e.wall_time_s)])
    paths.append(path)

    if report.timings:
        path = out / "timings.json"
        path.write_text(json.dumps(report.timings, indent=2) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def load_report(path) -> BenchmarkReport:
    with Path(path).open(encoding="utf-8") as fh:
        return BenchmarkReport.from_dict(json.load(fh))
