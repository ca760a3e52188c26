import os
import shutil
import sys
from datetime import date, timedelta

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from emostock import synthetic  # noqa: E402
from emostock.ingest import DailyPrice  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def make_prices(closes, start=date(2022, 1, 3)):
    """Weekday price rows with the given closes and consistent OHLC."""
    out = []
    d = start
    for c in closes:
        while d.weekday() >= 5:
            d += timedelta(days=1)
        out.append(DailyPrice(d, c, c * 1.01, c * 0.99, c, 1000))
        d += timedelta(days=1)
    return out


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def synthetic_dir(tmp_path):
    """A private copy of the bundled synthetic fixture."""
    dst = tmp_path / "synthetic"
    shutil.copytree(synthetic.bundled_dir(), dst)
    return dst


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
