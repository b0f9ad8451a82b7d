"""Shared pytest wiring: a summary section for the acceptance suite."""

_ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance test after the run."""
    outcomes: dict[str, str] = {}
    for category, reports in terminalreporter.stats.items():
        if category not in ("passed", "failed", "error"):
            continue
        for rep in reports:
            nodeid = getattr(rep, "nodeid", "")
            if _ACCEPTANCE_FILE not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            # any failed phase (setup/call/teardown) marks the test FAIL
            if category in ("failed", "error"):
                outcomes[name] = "FAIL"
            else:
                outcomes.setdefault(name, "PASS")
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(outcomes):
        terminalreporter.write_line(f"{outcomes[name]}  {name}")
