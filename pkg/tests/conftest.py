import pytest

_LINES_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record a one-line acceptance verdict shown in the terminal summary."""
    lines = request.config.stash.setdefault(_LINES_KEY, [])

    def add(label: str, passed: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if passed else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
