import numpy as np
import pytest

from blrkernels import use_backend
from blrkernels._backend import numba_available

BACKENDS = ["numpy"] + (["numba"] if numba_available() else [])

# criterion id -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c.lstrip("C"))):
        entries = ACCEPTANCE[cid]
        ok = all(e[0] for e in entries)
        detail = "; ".join(e[1] for e in entries)
        tr.write_line(f"{cid} {'PASS' if ok else 'FAIL'}: {detail}")
