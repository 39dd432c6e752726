import time

import pytest

_LINES = []


class Criterion:
    """Collects one acceptance line; call ``check`` once per criterion."""

    def __init__(self, label):
        self.label = label
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {self.label}: {detail} [{self.elapsed:.1f}s]"
        _LINES.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
