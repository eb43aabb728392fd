import datetime as dt

import numpy as np
import pytest

from ftsbench.series import PriceSeries, ReturnSeries


def trading_days(n, start=dt.date(2020, 1, 1)):
    return tuple(start + dt.timedelta(days=i) for i in range(n))


def make_prices(closes, start=dt.date(2020, 1, 1)):
    return PriceSeries(trading_days(len(closes), start), np.asarray(closes, dtype=float))


def make_returns(values, start=dt.date(2020, 1, 1)):
    return ReturnSeries(trading_days(len(values), start), np.asarray(values, dtype=float))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
