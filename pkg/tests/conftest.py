import numpy as np
import pytest

from ballgen.metrics import kernel_error_sweep


@pytest.fixture(scope="session")
def kernel_sweep_tables():
    """Five independent error sweeps over D in {10, 100, 1000, 10000} at d=2, unit kernel."""
    return [
        kernel_error_sweep(2, np.ones(2), [10, 100, 1000, 10_000], 10_000, seed=1000 + s)
        for s in range(5)
    ]
