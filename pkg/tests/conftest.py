import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from ldlc import _kernels


@pytest.fixture(scope="session", autouse=True)
def _jit_warmup():
    """Compile all numba kernels once up front so individual tests don't
    pay (or mis-attribute) JIT latency."""
    _kernels.warmup()
