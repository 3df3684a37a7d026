import contextlib

import numpy as np
import pytest

from elastic_demand import DemandPanel, ShiftBounds, simulate_panel

_ACCEPTANCE: list[tuple[str, str, str]] = []


@pytest.fixture
def table1():
    """The two equally likely hourly patterns used throughout the examples."""
    return DemandPanel([[10.0, 20.0], [20.0, 10.0]], ("p1", "p2"), ("9-10", "10-11"))


@pytest.fixture(scope="session")
def generated():
    return simulate_panel(days=10, slots_per_day=24, noise_scale=0.3, seed=42)


@pytest.fixture
def bounds_for():
    def make(panel, L, U, cyclic=False):
        return ShiftBounds.for_panel(panel, L, U, cyclic=cyclic)

    return make


@pytest.fixture
def criterion():
    """Record one acceptance line: ``with criterion("3", "costs"): ...``."""

    @contextlib.contextmanager
    def record(number, title):
        try:
            yield
        except BaseException as exc:
            _ACCEPTANCE.append((number, "FAIL", f"{title} ({type(exc).__name__})"))
            raise
        _ACCEPTANCE.append((number, "PASS", title))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
