import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from hazardlab import _kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile (or load cached) jit kernels once so timed tests stay honest
    _kernels.warmup()
