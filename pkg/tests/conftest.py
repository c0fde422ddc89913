import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
# heavier run: pytest --hypothesis-profile=fuzz
settings.register_profile("fuzz", deadline=None, max_examples=3000)
settings.load_profile("default")

from polymag.processes import BUILTINS, builtin

CLOSED = [name for name, entry in BUILTINS.items() if entry.closed]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def specs():
    return {name: builtin(name) for name in CLOSED}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
