import pathlib
import sys

ACCEPTANCE_LINES = []

DATA = pathlib.Path(__file__).parent / "data"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
