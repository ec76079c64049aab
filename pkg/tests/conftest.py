import pytest

from volspill import kernels


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile every numba kernel once so timed tests exclude compilation."""
    kernels.warm_up()
    return True
