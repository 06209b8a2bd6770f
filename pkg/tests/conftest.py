import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, dim, cols=None):
    shape = (dim,) if cols is None else (dim, cols)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=0)


# one summary line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
CRITERIA = range(1, 12)


def pytest_terminal_summary(terminalreporter):
    reports = [r for rs in terminalreporter.stats.values() for r in rs if hasattr(r, "when")]
    if not any("test_acceptance.py" in r.nodeid for r in reports):
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in CRITERIA:
        if k in ACCEPTANCE:
            passed, detail = ACCEPTANCE[k]
            status = "PASS" if passed else "FAIL"
        elif any(f"test_criterion_{k:02d}" in r.nodeid for r in reports):
            status, detail = "FAIL", "raised before completing its checks"
        else:
            status, detail = "NOT RUN", "deselected"
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {detail}")
