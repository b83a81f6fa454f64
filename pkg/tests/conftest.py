from pathlib import Path

import pytest

from plicfw.german import german_universe
from plicfw.simgen import ExperimentConfig, build_synthetic_universe

GERMAN_DATA = Path(__file__).resolve().parents[1] / "data" / "german.data"


@pytest.fixture(scope="session")
def german_path():
    if not GERMAN_DATA.exists():
        pytest.skip("data/german.data not present")
    return GERMAN_DATA


@pytest.fixture(scope="session")
def synthetic_universe():
    return build_synthetic_universe(ExperimentConfig.synthetic(seed=0))


@pytest.fixture(scope="session")
def german_setup(german_path):
    return german_universe(german_path, ExperimentConfig.german(seed=0))


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""
    def _report(number, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
