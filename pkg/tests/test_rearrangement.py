import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, stats

from conftest import atoms
from symmetrize.errors import DomainError
from symmetrize.measure_space import ModelSpace, SampledFunction, indicator, sample_function
from symmetrize.rearrangement import (
    MonotoneStep, PiecewiseLinear, decreasing_rearrangement, distribution,
    hardy_littlewood_sup, interpolated_rearrangement, linear_rearrangement,
    maximal_function, model_rearrangement, oscillation, smooth_oscillation,
)


def test_distribution_examples(identity):
    mu = distribution(identity)
    t = np.array([0.0, 0.25, 0.5, 0.9])
    assert np.allclose(mu(t), 1 - t, atol=1e-3)
    chi = distribution(indicator(0.3))
    assert chi(0.5) == pytest.approx(0.3) and chi(1.0) == 0.0 and chi(2.0) == 0.0
    two = distribution(SampledFunction([2.0, 1.0], [0.5, 0.5], [0, 0]))
    assert (two(0.0), two(0.5), two(1.0), two(1.5), two(2.0)) == (1.0, 1.0, 0.5, 0.5, 0.0)


def test_rearrangement_examples(identity):
    fs = decreasing_rearrangement(identity)
    s = np.array([0.1, 0.5, 0.77])
    assert np.allclose(fs(s), 1 - s, atol=1e-3)
    chi = decreasing_rearrangement(indicator(0.4))
    assert chi(0.39) == 1.0 and chi(0.4) == 0.0
    f = decreasing_rearrangement(SampledFunction([1.0, 3.0], [0.8, 0.2], [0, 0]))
    assert list(f.breaks) == pytest.approx([0.2, 1.0]) and list(f.values) == [3.0, 1.0]


def test_maximal_function_examples(identity):
    chi = decreasing_rearrangement(indicator(0.25))
    assert maximal_function(chi, 0.5) == pytest.approx(0.5)
    fs = decreasing_rearrangement(identity)
    t = np.array([0.2, 0.6, 1.0])
    assert np.allclose(maximal_function(fs, t), 1 - t / 2, atol=1e-12)
    c = decreasing_rearrangement(SampledFunction([-2.0] * 3, [0.2, 0.3, 0.5], [0] * 3))
    assert np.allclose(maximal_function(c, t), 2.0)
    with pytest.raises(DomainError):
        maximal_function(fs, 0.0)
    with pytest.raises(DomainError):
        maximal_function(fs, 1.5)


def test_hls_examples(identity):
    assert hardy_littlewood_sup(identity, 0.5) == pytest.approx(0.375, abs=1e-12)
    assert hardy_littlewood_sup(identity, 1.0) == pytest.approx(identity.l1(), abs=1e-15)
    with pytest.raises(DomainError):
        hardy_littlewood_sup(identity, 0.0)


def test_oscillation_examples(identity):
    # midpoint samples: the step rearrangement is off by half a cell
    assert oscillation(identity, 0.5) == pytest.approx(0.25 - 0.5 / 1000, abs=1e-12)
    assert oscillation(indicator(0.25), 0.5) == pytest.approx(0.5)
    assert oscillation(SampledFunction([1.5, 1.5], [0.5, 0.5], [0, 0]), 0.3) == 0.0
    with pytest.raises(DomainError):
        oscillation(identity, 1.0)


def _brute_force_sup(vals, w, t):
    """Best subset of equal-mass atoms of total mass <= t, topped up with a
    fraction of one further atom."""
    n = len(vals)
    cell = w[0]
    best = 0.0
    for r in range(n + 1):
        for S in itertools.combinations(range(n), r):
            rem = t - r * cell
            rest = [abs(vals[i]) for i in range(n) if i not in S]
            if rem < -1e-15 or (rest and rem > cell + 1e-15):
                continue
            base = sum(abs(vals[i]) * cell for i in S)
            best = max(best, base + (max(rem, 0.0) * max(rest) if rest else 0.0))
    return best


@given(atoms(max_size=8, equal=True), st.floats(0.01, 1.0))
def test_hls_matches_enumeration(f, t):
    assert hardy_littlewood_sup(f, t) == pytest.approx(
        _brute_force_sup(f.values, f.weights, t), abs=1e-12)


@given(atoms())
def test_equimeasurable(f):
    fs = decreasing_rearrangement(f)
    # distribution of f* with Lebesgue weights equals distribution of f at every height
    g = SampledFunction(fs.values, fs.lengths / fs.lengths.sum(), np.zeros_like(fs.values))
    levels = np.concatenate(([0.0], np.abs(f.values)))
    assert np.allclose(distribution(g)(levels), distribution(f)(levels), atol=1e-12)
    assert fs.integral(1.0) == pytest.approx(f.l1(), abs=1e-12)


@given(atoms(), st.lists(st.floats(0.001, 1.0), min_size=2, max_size=10))
def test_maximal_dominates_and_decreases(f, ts):
    fs = decreasing_rearrangement(f)
    t = np.sort(ts)
    ff = maximal_function(fs, t)
    assert np.all(ff >= fs(t) - 1e-12)
    assert np.all(np.diff(ff) <= 1e-12)


def test_fubini_identity_piecewise_linear():
    rng = np.random.default_rng(3)
    for _ in range(20):
        knots = np.sort(rng.random(12))
        vals = np.sort(rng.random(12) * 4)[::-1]
        g = PiecewiseLinear(knots, vals)
        t = rng.uniform(0.01, 1.0, 8)
        lhs = g.average(t) - g(t)
        rhs = g.moment_of_slope(t) / t
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_monotone_step_contracts(tmp_path):
    with pytest.raises(ValueError):
        MonotoneStep(np.array([0.5, 0.4]), np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        MonotoneStep(np.array([0.5, 1.0]), np.array([1.0, 2.0]))
    g = MonotoneStep(np.array([0.5, 1.0]), np.array([2.0, 1.0]))
    assert g.integral(0.75) == pytest.approx(1.25)
    assert list(g.jumps()) == [1.0, 1.0]
    p = tmp_path / "f.csv"
    with open(p, "w") as fh:
        g.to_csv(fh)
    assert p.read_text().splitlines() == ["breakpoint,value", "0.5,2.0", "1.0,1.0"]


def test_linear_surrogate_second_order(unit):
    for n in (256, 512):
        f = sample_function(unit, "x^2", "2*x", n)
        t = np.array([0.1, 0.4, 0.7])
        # x^2 rearranged is (1-s)^2; oscillation = (1-s)^2 averaged minus value
        exact = ((1 - (1 - t) ** 3) / (3 * t)) - (1 - t) ** 2
        assert np.allclose(smooth_oscillation(f, t), exact, atol=4.0 / n ** 2)


def test_interpolated_rearrangement_monotone_function(unit):
    f = sample_function(unit, "x", "1", 200)
    g = interpolated_rearrangement(f)
    s = np.linspace(0.01, 0.99, 50)
    assert np.allclose(g(s), 1 - s, atol=1e-12)
    assert interpolated_rearrangement(SampledFunction([1.0, 2.0], [0.5, 0.5], [0, 0])) is None


def test_linear_rearrangement_knots(identity):
    g = linear_rearrangement(identity)
    assert g.knots[0] == pytest.approx(0.0005)
    assert np.all(np.diff(g.values) <= 0)


def test_model_oscillation_gaussian_abs(gauss):
    # |x| has f*(s) = ndtri(1 - s/2) and t f**(t) = 2 phi(f*(t))
    t = np.geomspace(1e-4, 0.5, 25)
    lam = stats.norm.isf(t / 2)
    exact = 2 * stats.norm.pdf(lam) / t - lam
    for n in (1024, 4096):
        f = sample_function(gauss, "abs(x)", "1", n)
        assert np.allclose(smooth_oscillation(f, t), exact, rtol=5e-4, atol=0)


def test_model_rearrangement_gaussian_abs(gauss):
    g = model_rearrangement(sample_function(gauss, "abs(x)", "1", 2048))
    assert np.all(np.diff(g.knots) > 0) and np.all(np.diff(g.values) <= 0)
    # the model is |x| exactly outside the middle cell, so the knots are exact
    s, v = g.knots, g.values
    far = (v > 0.01) & (s > 1e-300)
    assert np.allclose(v[far], stats.norm.isf(s[far] / 2), rtol=1e-9)
    assert s[0] < 1e-15


def test_model_handles_flat_pieces(unit):
    f = sample_function(unit, "min(x, 0.5)", "1", 1000)
    t = np.array([0.2, 0.45, 0.7])
    # f* = 1/2 on (0, 1/2), then 1 - s
    assert np.allclose(smooth_oscillation(f, t), [0.0, 0.0, 0.33 / 0.7 - 0.3], atol=1e-6)
    assert np.allclose(model_rearrangement(f)([0.2, 0.7]), [0.5, 0.3], atol=1e-6)
    c = sample_function(unit, "2.5", "0", 64)
    assert np.all(smooth_oscillation(c, t) == 0.0)


def test_model_oscillation_ball():
    # 1 - r on the 3-ball: f*(s) = 1 - s^(1/3)
    f = sample_function(ModelSpace("euclidean_ball", 3), "1-r", "1", 2000)
    t = np.array([0.01, 0.2, 0.6])
    exact = (1 - 0.75 * t ** (1 / 3)) - (1 - t ** (1 / 3))
    assert np.allclose(smooth_oscillation(f, t), exact, atol=1e-6)


def test_model_oscillation_refines_at_small_t(gauss):
    # f grows in both tails; for large levels {f > lam} is two half-lines
    f = lambda x: x * np.exp(-x * x / 4) + 0.3 * x * x
    grad = "abs((1 - x^2/2)*exp(-x^2/4) + 0.6*x)"

    def exact(t):
        ends = lambda L: (optimize.brentq(lambda x: f(x) - L, -20, -2),
                          optimize.brentq(lambda x: f(x) - L, 2, 20))
        lam = optimize.brentq(lambda L: stats.norm.cdf(ends(L)[0]) + stats.norm.sf(ends(L)[1]) - t,
                              2.5, 50.0, xtol=1e-14)
        xl, xr = ends(lam)
        g = lambda x: (f(x) - lam) * stats.norm.pdf(x)
        return (integrate.quad(g, -np.inf, xl)[0] + integrate.quad(g, xr, np.inf)[0]) / t

    t = np.array([1e-4, 1e-3])
    ref = np.array([exact(s) for s in t])
    # t = 1e-4 sits beyond the last node at N = 4096, inside the Taylor-closed end cell
    for n, tol in ((4096, 2e-2), (16384, 1e-2)):
        got = smooth_oscillation(sample_function(gauss, "x*exp(-x^2/4) + 0.3*x^2", grad, n), t)
        assert np.allclose(got, ref, rtol=tol)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(0.01, 0.99))
def test_model_oscillation_matches_dense_sort(coef, t):
    c0, c1, c2 = coef
    f = sample_function(ModelSpace("unit_interval"), f"{c0} + {c1}*x + {c2}*x^2",
                        f"abs({c1} + 2*{c2}*x)", 2048)
    # reference from 2^20 sorted midpoint samples
    x = (np.arange(2 ** 20) + 0.5) / 2 ** 20
    v = np.sort(np.abs(c0 + c1 * x + c2 * x * x))[::-1]
    k = int(round(t * x.size))
    ref = v[:k].mean() - v[k]
    got = smooth_oscillation(f, k / x.size)
    assert got >= 0
    assert got == pytest.approx(ref, abs=5e-5)
