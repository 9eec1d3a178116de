import numpy as np
import pytest

from symmetrize.errors import DivergenceError
from symmetrize.quadrature import CumulativeIntegral, integrate, integrate_from_zero, panel_edges


def test_panels_cover_range():
    e = panel_edges(1e-6, 0.9)
    assert e[0] == pytest.approx(1e-6) and e[-1] == pytest.approx(0.9)
    assert np.all(np.diff(e) > 0)


def test_integrate_polynomial_and_log():
    assert integrate(lambda s: s ** 3, 0.1, 0.8) == pytest.approx((0.8 ** 4 - 0.1 ** 4) / 4, rel=1e-13)
    assert integrate(lambda s: np.log(s), 1e-6, 0.5) == pytest.approx(
        (0.5 * np.log(0.5) - 0.5) - (1e-6 * np.log(1e-6) - 1e-6), rel=1e-10)


def test_from_zero_integrable_singularity():
    assert integrate_from_zero(lambda s: s ** -0.5, 0.25) == pytest.approx(1.0, rel=1e-4)


def test_from_zero_divergent():
    with pytest.raises(DivergenceError):
        integrate_from_zero(lambda s: 1 / s, 0.5)


def test_cumulative_matches_direct():
    F = CumulativeIntegral(lambda s: s ** -0.5)
    t = np.array([1e-4, 0.01, 0.3, 0.77])
    # the floor strip floor*f(floor) misses half of int_0^floor s^-1/2
    assert np.allclose(F(t), 2 * np.sqrt(t), rtol=0, atol=2e-5)
