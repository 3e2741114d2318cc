import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("kolmolab", deadline=None, max_examples=40)
settings.load_profile("kolmolab")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
