import pytest

from cstrid.acceptance import AcceptanceContext

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_ctx():
    return AcceptanceContext()


@pytest.fixture(scope="session")
def reference_run(acceptance_ctx):
    return acceptance_ctx.reference()


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
