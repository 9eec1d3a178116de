import numpy as np
import pytest
from hypothesis import settings, strategies as st

from symmetrize.measure_space import ModelSpace, SampledFunction, sample_function

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def atoms(draw, min_size=1, max_size=12, signed=True, equal=False):
    """A SampledFunction with random values and weights (no space attached)."""
    n = draw(st.integers(min_size, max_size))
    lo = -5.0 if signed else 0.0
    vals = draw(st.lists(st.floats(lo, 5.0, allow_nan=False), min_size=n, max_size=n))
    if equal:
        w = np.full(n, 1.0 / n)
    else:
        raw = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
        w = np.asarray(raw) / np.sum(raw)
        w[-1] = 1.0 - np.sum(w[:-1])
    grads = draw(st.lists(st.floats(0.0, 3.0), min_size=n, max_size=n))
    return SampledFunction(np.asarray(vals), w, np.asarray(grads))


@pytest.fixture
def unit():
    return ModelSpace("unit_interval")


@pytest.fixture
def gauss():
    return ModelSpace("gaussian1d")


@pytest.fixture
def identity(unit):
    return sample_function(unit, "x", "1", 1000)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
