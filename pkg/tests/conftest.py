import os
import sys

from hypothesis import settings

# the oracles module sits next to the tests
sys.path.insert(0, os.path.dirname(__file__))

# first calls pay for lazy imports; timing is not what these tests check
settings.register_profile("default", deadline=None)
settings.load_profile("default")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
