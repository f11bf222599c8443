import os
import sys

# keep unit tests single-threaded unless a test asks otherwise
os.environ.setdefault("RANDHILL_THREADS", "1")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        passed, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")
