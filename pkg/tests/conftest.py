import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def complex_blocks(n, rows, cols=None):
    """Strategy for an ``(n, rows, cols)`` complex array with bounded entries."""
    cols = rows if cols is None else cols
    shape = (n, rows, cols)
    return st.tuples(arrays(float, shape, elements=finite), arrays(float, shape, elements=finite)).map(
        lambda ri: ri[0] + 1j * ri[1]
    )


def nonzero(blocks):
    return np.linalg.norm(blocks) > 1e-3


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
