import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion's result for the end-of-run summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, name, passed, detail=""):
        lines.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[_ACCEPTANCE_KEY]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
