import pytest

ACCEPTANCE_KEY = pytest.StashKey[dict]()
N_CRITERIA = 10


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """record(n, passed, detail) stores one acceptance line for the summary."""
    log = request.config.stash[ACCEPTANCE_KEY]

    def record(n, passed, detail):
        log[n] = (bool(passed), detail)
        print(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        passed, detail = log.get(n, (False, "not run or errored before recording"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
