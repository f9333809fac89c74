import numpy as np
import pytest

from hurstwave import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


BACKENDS = [_kernels.python_backend] + ([_kernels.compiled_backend] if _kernels.compiled_backend else [])


@pytest.fixture(params=BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
