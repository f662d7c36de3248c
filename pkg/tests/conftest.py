import numpy as np
import pytest

# criterion number -> (passed, message); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}
ACCEPTANCE_CRITERIA = range(1, 13)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    ran = any("test_acceptance" in str(r.nodeid)
              for key in ("passed", "failed", "error")
              for r in terminalreporter.stats.get(key, []))
    if not ran:
        return
    broken = any("test_acceptance" in str(r.nodeid)
                 for key in ("failed", "error") for r in terminalreporter.stats.get(key, []))
    terminalreporter.section("acceptance criteria")
    for i in ACCEPTANCE_CRITERIA:
        if i in ACCEPTANCE_RESULTS:
            ok, msg = ACCEPTANCE_RESULTS[i]
            terminalreporter.write_line(f"criterion {i:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
        elif broken:
            terminalreporter.write_line(f"criterion {i:2d}: FAIL  did not complete")
        else:
            terminalreporter.write_line(f"criterion {i:2d}: not run")
