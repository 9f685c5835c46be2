import sys

import numpy as np
import pytest

from caradory.kernels import available_backends


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]
