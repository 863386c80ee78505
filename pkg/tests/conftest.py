import pytest

from orbitlab._kernels import warm_kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_numba_kernels():
    # compile (or load cached) jitted kernels once so timed tests stay honest
    warm_kernels()
