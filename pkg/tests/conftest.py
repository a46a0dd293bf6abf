import re

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            key = (int(m.group(1)), m.group(2))
            prev, total = rows.get(key, ("passed", 0.0))
            rows[key] = (prev if outcome == "passed" else outcome, total + getattr(rep, "duration", 0.0))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (outcome, dur) in sorted(rows.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num} [{name}]: {status} ({dur:.1f} s)")
