import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance verdict lines after the test summary.

    The acceptance tests print one PASS/FAIL line each; pytest swallows
    stdout of passing tests, so the lines are collected in a module
    global and replayed here where they are always visible.
    """
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
