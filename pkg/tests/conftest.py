import numpy as np
import pytest
from hypothesis import settings

from nplink import _kernels

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=sorted(_kernels.backends()))
def backend(request):
    """Each available kernel module in turn."""
    return _kernels.backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_criteria = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Store a one-line verdict for an acceptance criterion, shown in the terminal summary."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config.stash.setdefault(_criteria, {})[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_criteria, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
