import zlib

import numpy as np
import pytest


def crandn(rng, *shape):
    """I.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng(request):
    # stable per-test seed so failures reproduce
    seed = zlib.crc32(request.node.name.encode())
    return np.random.default_rng(seed)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; summarised after the run."""

    def record(name, passed, detail):
        _ACCEPTANCE[name] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if passed else 'FAIL'}: {detail}")
