import pytest

from invreins import ModelParams, Solution

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def record(request):
    """Append one acceptance line; shown again in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append((number, line))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def defaults():
    return ModelParams()


@pytest.fixture(scope="session")
def sol(defaults):
    return Solution.build(defaults)


@pytest.fixture(scope="session")
def sol_rho07(defaults):
    return Solution.build(defaults.with_(rho=0.7))
