import numpy as np
import pytest
from hypothesis import given, strategies as st

from symmetrize.errors import AdaptednessError, AlignmentError
from symmetrize.martingale import (
    HERZ_THRESHOLD, DyadicMartingale, StoppingTime, differences, dyadic_filtration,
    martingale_from_leaves, maximal_function, random_martingale, random_stopping_time,
    square_function, stopped_differences, stopped_square_check, verify_herz,
)
from symmetrize.measure_space import ModelSpace, sample_function


def test_sign_example():
    m = martingale_from_leaves([1.0, -1.0])
    assert m.levels[0][0] == 0.0 and list(m.levels[1]) == [1.0, -1.0]
    assert np.all(square_function(m).values == 1.0)
    assert np.all(maximal_function(m).values == 1.0)


def test_filtration_of_identity(unit):
    f = sample_function(unit, "x", "1", 1024)
    m = dyadic_filtration(f, 2)
    assert m.levels[0][0] == pytest.approx(0.5)
    assert m.levels[1] == pytest.approx([0.25, 0.75])
    assert m.levels[2] == pytest.approx([0.125, 0.375, 0.625, 0.875])
    assert m.tower_defect() < 1e-15


def test_alignment_errors(unit, gauss):
    with pytest.raises(AlignmentError):
        martingale_from_leaves([1.0, 2.0, 3.0])
    with pytest.raises(AlignmentError):
        dyadic_filtration(sample_function(unit, "x", "1", 1000), 4)
    with pytest.raises(AlignmentError):
        dyadic_filtration(sample_function(gauss, "x", "1", 1024), 3)
    with pytest.raises(ValueError):
        DyadicMartingale(2, (np.zeros(1), np.zeros(2)))


@given(st.integers(1, 8), st.integers(0, 2 ** 32))
def test_tower_and_parseval(depth, seed):
    m = random_martingale(depth, seed)
    assert m.tower_defect() == 0.0
    d = differences(m)
    # orthogonal increments: ||S f||_2^2 = ||E_depth f||_2^2
    assert np.mean(np.sum(d ** 2, axis=0)) == pytest.approx(np.mean(m.levels[-1] ** 2), abs=1e-9)
    assert np.allclose(np.cumsum(d, axis=0)[-1], m.levels[-1])
    assert np.all(np.abs(np.diff(m.levels[-1].reshape(-1, 2), axis=1)) <= 2.0)


def test_random_martingale_reproducible():
    a, b = random_martingale(6, 42), random_martingale(6, 42)
    assert all(np.array_equal(x, y) for x, y in zip(a.levels, b.levels))
    assert a.seed == 42


def test_stopping_time_adaptedness():
    StoppingTime(2, np.array([1, 1, 2, 2]))
    with pytest.raises(AdaptednessError):
        StoppingTime(2, np.array([0, 1, 1, 1]))
    with pytest.raises(AdaptednessError):
        StoppingTime(2, np.array([1, 2, 1, 1]))
    with pytest.raises(AdaptednessError):
        StoppingTime(2, np.array([0.5, 0.5, 2, 2]))
    with pytest.raises(AdaptednessError):
        StoppingTime(2, np.array([3, 3, 3, 3]))


def test_stopped_square_foreign_time():
    m = random_martingale(3, 0)
    nu = StoppingTime(2, np.zeros(4, dtype=int))
    with pytest.raises(AdaptednessError):
        stopped_square_check(m, nu, nu)
    with pytest.raises(AdaptednessError):
        stopped_square_check(m, np.zeros(8), np.zeros(8))


def test_stopped_empty_when_nu_not_before_tau():
    m = random_martingale(4, 3)
    tau = StoppingTime(4, np.full(16, 2))
    assert not np.any(stopped_differences(m, tau, tau))
    r = stopped_square_check(m, tau, tau)
    assert r.passed and max(r.lhs) == 0.0


@given(st.integers(1, 9), st.integers(0, 2 ** 32), st.floats(0.05, 0.6))
def test_stopped_square_random(depth, seed, p):
    rng = np.random.default_rng(seed)
    m = random_martingale(depth, seed)
    nu = random_stopping_time(depth, rng, p)
    tau = random_stopping_time(depth, rng, p / 2)
    r = stopped_square_check(m, nu, tau)
    assert r.passed
    assert np.all(np.asarray(r.lhs) <= np.asarray(r.rhs))


def test_herz_trivial_cases():
    r = verify_herz(martingale_from_leaves(np.full(16, 2.0)))
    assert r.passed and r.params["sup_ratio"] == 0.0
    r = verify_herz(martingale_from_leaves([1.0, -1.0] * 8))
    assert r.passed and r.params["sup_ratio"] == 0.0


@given(st.integers(2, 9), st.integers(0, 2 ** 32))
def test_herz_random(depth, seed):
    r = verify_herz(random_martingale(depth, seed))
    assert r.passed and r.params["sup_ratio"] <= HERZ_THRESHOLD
