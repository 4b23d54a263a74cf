import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# acceptance results, filled by test_acceptance.py: (number, name, passed, detail)
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  [{num:2d}] {name}: {detail}")
