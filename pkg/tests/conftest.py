"""Emit one PASS/FAIL line per acceptance criterion in the run summary."""

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_outcomes[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _acceptance_outcomes[name] = report.outcome  # setup error or skip


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for fn_name, (num, label) in sorted(CRITERIA.items(), key=lambda kv: kv[1][0]):
        outcome = _acceptance_outcomes.get(fn_name)
        verdict = "PASS" if outcome == "passed" else "FAIL" if outcome is not None else "NOT RUN"
        terminalreporter.write_line(f"ACCEPTANCE {num} ({label}): {verdict}")
