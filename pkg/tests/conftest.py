import numpy as np
import pytest

_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, title, metric, tolerance, passed)``."""

    def _record(number, title, metric, tolerance, passed):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {metric} (tolerance {tolerance})"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
