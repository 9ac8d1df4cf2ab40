import io
from contextlib import redirect_stdout

import pytest

from cdmoments.cli import main

ACCEPTANCE_LINES = []


@pytest.fixture
def run_cli():
    def run(*argv):
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main([str(a) for a in argv])
        return code, buffer.getvalue()

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
