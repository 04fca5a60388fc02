"""Pytest wiring: print one PASS/FAIL line per acceptance criterion."""

_outcomes: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _outcomes.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _outcomes:
        label = name.removeprefix("test_").replace("_", " ")
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{word}: {label}")
