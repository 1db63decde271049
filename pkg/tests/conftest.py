"""Shared pytest configuration.

Prints one PASS/FAIL line per acceptance criterion at the end of a run so
the acceptance gate is readable without scanning the full pytest output.
"""

import re


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.getreports(outcome):
            match = re.search(r"test_acceptance\.py::\w*::(test_criterion_\S+)", report.nodeid)
            if match is None:
                match = re.search(r"test_acceptance\.py::(test_criterion_\S+)", report.nodeid)
            if match is None:
                continue
            name = match.group(1).replace("test_criterion_", "criterion ")
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in sorted(set(lines)):
            terminalreporter.write_line(f"{verdict}  {name}")
