import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(acceptance_log.RESULTS):
        title, ok, detail, elapsed, limit = acceptance_log.RESULTS[number]
        status = "PASS" if ok else "FAIL"
        tr.write_line(f"[{status}] criterion {number}: {title} ({elapsed:.1f}s of {limit:.0f}s) | {detail}")
