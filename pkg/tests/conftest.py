import time

import pytest

from fosmo.config import load_config
from fosmo.simulate import run_simulation


class BenchmarkRun:
    """The bundled scenario simulated once and shared across the suite."""

    def __init__(self):
        self.config = load_config('preset = "paper-example"\n')
        started = time.perf_counter()
        self.result = run_simulation(self.config)
        self.elapsed = time.perf_counter() - started


@pytest.fixture(scope="session")
def paper_run():
    return BenchmarkRun()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            name = report.nodeid
            if "test_acceptance.py" not in name:
                continue
            label = name.split("::")[-1]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines.append((label, verdict))
    if lines:
        terminalreporter.section("acceptance criteria")
        for label, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {label}")
