import pytest

from mldfs import _core

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture(params=sorted(_core.backends()))
def kern(request):
    """Each importable kernel backend in turn."""
    return _core.backends()[request.param]


@pytest.fixture
def record_criterion(request):
    """Record a one-line PASS/FAIL verdict, echoed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append((n, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
