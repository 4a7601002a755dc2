import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rismec.model import SystemConfig

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# one verdict line per acceptance criterion, filled in by test_acceptance
VERDICTS: dict[int, str] = {}


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])
