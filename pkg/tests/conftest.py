"""Shared pytest plumbing.

The acceptance module records one verdict line per criterion in
ACCEPTANCE_LINES; the hook below replays them in a dedicated section of
the terminal summary so the verdicts stay visible even when captured
stdout is swallowed for passing tests.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
