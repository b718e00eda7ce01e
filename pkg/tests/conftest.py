import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the pass flag so tests can assert on it."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _RESULTS.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)
