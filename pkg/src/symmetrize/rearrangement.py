"""Distribution functions, decreasing rearrangements and oscillations.

All curves are exact step functions of the atom partition, so integrals
are closed-form sums and the only error source is the sampling itself.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .coordinate_model import coordinate_oscillation, coordinate_rearrangement, supports_coordinate_model
from .errors import DomainError

__all__ = [
    "MonotoneStep", "PiecewiseLinear", "distribution", "decreasing_rearrangement",
    "maximal_function", "hardy_littlewood_sup", "oscillation",
    "linear_rearrangement", "smooth_oscillation", "interpolated_rearrangement",
    "model_rearrangement",
]


@dataclass(frozen=True, eq=False)
class MonotoneStep:
    """Right-continuous non-increasing step function.

    ``values[k]`` holds on ``[breaks[k-1], breaks[k])`` (with ``breaks[-1]``
    read as 0) and ``tail`` holds from the last break on.
    """

    breaks: np.ndarray
    values: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.shape != v.shape or b.ndim != 1:
            raise ValueError("breaks and values must be aligned 1-d arrays")
        if b.size and (b[0] <= 0 or np.any(np.diff(b) <= 0)):
            raise ValueError("breaks must be positive and strictly increasing")
        if np.any(np.diff(np.append(v, self.tail)) > 0):
            raise ValueError("values must be non-increasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tail", float(self.tail))

    @property
    def starts(self):
        return np.concatenate(([0.0], self.breaks[:-1]))

    @property
    def lengths(self):
        return np.diff(np.concatenate(([0.0], self.breaks)))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        k = np.searchsorted(self.breaks, s, side="right")
        out = np.append(self.values, self.tail)[k]
        return out if out.ndim else float(out)

    def integral(self, t):
        """``int_0^t`` of the step function (exact)."""
        t = np.asarray(t, dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(self.values * self.lengths)))
        k = np.searchsorted(self.breaks, t, side="right")
        start = np.concatenate(([0.0], self.breaks))[k]
        height = np.append(self.values, self.tail)[k]
        out = cum[k] + height * (t - start)
        return out if out.ndim else float(out)

    def power(self, q):
        """The step function ``g**q`` (assumes non-negative values)."""
        return MonotoneStep(self.breaks, self.values ** q, self.tail ** q)

    def jumps(self):
        """Jump sizes ``g(b-) - g(b)`` at each break: the measure ``-dg``."""
        return self.values - np.append(self.values[1:], self.tail)

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["breakpoint", "value"])
        for b, v in zip(self.breaks, self.values):
            w.writerow([repr(float(b)), repr(float(v))])


def _sorted_atoms(f):
    """``|values|`` sorted decreasingly with their weights (stable order)."""
    a = np.abs(f.values)
    order = np.argsort(-a, kind="stable")
    return a[order], f.weights[order]


def _merge(values, weights):
    """Merge runs of equal values in a sorted array, summing the weights."""
    if values.size == 0:
        return values, weights
    new = np.concatenate(([True], values[1:] != values[:-1]))
    idx = np.flatnonzero(new)
    return values[idx], np.add.reduceat(weights, idx)


def decreasing_rearrangement(f):
    """``f*`` on (0, 1] as a step function; equal ``|values|`` are merged."""
    a, w = _merge(*_sorted_atoms(f))
    c = np.cumsum(w)
    c[-1] = 1.0  # total mass is 1 up to rounding; pin the last break
    keep = np.concatenate((np.diff(c) > 0, [True]))
    return MonotoneStep(c[keep], a[keep], 0.0)


def distribution(f):
    """``t -> mu{|f| > t}`` on the level axis ``[0, max|f|]``."""
    a, w = _merge(*_sorted_atoms(f))
    a, w = a[::-1], w[::-1]  # ascending levels
    tail_mass = np.cumsum(w[::-1])[::-1]  # mass of |f| >= a_j
    pos = a > 0
    if not np.any(pos):
        return MonotoneStep(np.array([]), np.array([]), 0.0)
    return MonotoneStep(a[pos], np.minimum(tail_mass[pos], 1.0), 0.0)


def _check_t(t, closed_right=True):
    t = np.asarray(t, dtype=float)
    ok = (t > 0) & ((t <= 1) if closed_right else (t < 1))
    if not np.all(ok):
        raise DomainError("t must lie in (0, 1]" if closed_right else "t must lie in (0, 1)")
    return t


def maximal_function(fstar, t):
    """``f**(t) = (1/t) int_0^t f*``."""
    t = _check_t(t)
    return fstar.integral(t) / t


def hardy_littlewood_sup(f, t):
    """``sup{int_E |f| : mu(E) <= t}``, realised by the largest atoms plus a fractional one."""
    t = _check_t(t)
    return decreasing_rearrangement(f).integral(t)


def oscillation(f, t):
    """``f**(t) - f*(t)`` for the exact step rearrangement."""
    t = _check_t(t, closed_right=False)
    fs = decreasing_rearrangement(f)
    return maximal_function(fs, t) - fs(t)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear curve on (0, 1].

    Linear through the knots, extended linearly to the left of the first
    knot and constantly to the right of the last one.
    """

    knots: np.ndarray
    values: np.ndarray

    def _slopes(self):
        ds = np.diff(self.knots)
        return np.diff(self.values) / np.where(ds > 0, ds, 1.0)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.knots, self.values)
        if self.knots.size > 1:
            m0 = self._slopes()[0]
            left = s < self.knots[0]
            out = np.where(left, self.values[0] + m0 * (s - self.knots[0]), out)
        return out if out.ndim else float(out)

    def _nodes(self):
        """Knots with 0 prepended (and the value there by extrapolation)."""
        return np.concatenate(([0.0], self.knots)), np.concatenate(([self(0.0)], self.values))

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        x, y = self._nodes()
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))))
        k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 1)
        out = cum[k] + 0.5 * (y[k] + self(t)) * (t - x[k])
        return out if out.ndim else float(out)

    def average(self, t):
        return self.integral(t) / np.asarray(t, dtype=float)

    def moment_of_slope(self, t):
        """``int_0^t s * (-g)'(s) ds`` computed segment by segment."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, y = self._nodes()
        m = np.append(np.diff(y) / np.where(np.diff(x) > 0, np.diff(x), 1.0), 0.0)
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            b = np.minimum(np.append(x[1:], np.inf), ti)
            a = np.minimum(x, ti)
            out[i] = np.sum(-m * 0.5 * (b * b - a * a))
        return out if out.size > 1 else float(out[0])


def linear_rearrangement(f):
    """Piecewise-linear surrogate of ``f*``.

    The knots are the mass midpoints of the sorted atoms, so for a
    midpoint-sampled monotone function the surrogate is second-order
    accurate where the step rearrangement is only first-order.
    """
    a, w = _sorted_atoms(f)
    c = np.cumsum(w)
    mid = c - 0.5 * w
    return PiecewiseLinear(mid, a)


def smooth_oscillation(f, t):
    """``f** - f*`` from a second-order model of the sampled function.

    On the one-dimensional spaces the model is ``f`` itself, linear in the
    coordinate between nodes with Taylor-closed end cells; elsewhere it is
    the piecewise-linear surrogate of ``f*``.
    """
    t = _check_t(t, closed_right=False)
    if supports_coordinate_model(f):
        return coordinate_oscillation(f, t)
    g = linear_rearrangement(f)
    avg, val = g.average(t), g(t)
    d = avg - val
    # cancellation noise from the running average is not oscillation
    return np.where(d > 64 * np.finfo(float).eps * np.abs(avg), d, 0.0)


def _spread_distribution(lo, hi, w):
    """``lambda -> mu{|v| > lambda}`` when each mass ``w[k]`` is spread uniformly
    over the value interval ``[lo[k], hi[k]]`` (a point mass when lo == hi).

    Returns the event levels with the left and right limits of the
    distribution there; it is linear between consecutive levels.
    """
    spread = hi > lo
    c = np.where(spread, w / np.where(spread, hi - lo, 1.0), 0.0)
    # slope changes of the two branches {v > lam} and {v < -lam}
    pos = np.concatenate((lo[spread], hi[spread], -hi[spread], -lo[spread]))
    dsl = np.concatenate((-c[spread], c[spread], -c[spread], c[spread]))
    # count of active branches, so that empty stretches get slope exactly 0
    dcount = np.sign(dsl).astype(int) * -1
    base_slope = float(np.sum(dsl[pos <= 0]))
    base_count = int(np.sum(dcount[pos <= 0]))
    keep = pos > 0
    pos, dsl, dcount = pos[keep], dsl[keep], dcount[keep]
    atoms = np.abs(lo[~spread])
    aw = w[~spread]
    lev = np.unique(np.concatenate(([0.0], pos, atoms)))
    idx = np.searchsorted(lev, pos)
    slope_after = base_slope + np.cumsum(np.bincount(idx, weights=dsl, minlength=lev.size))
    active = base_count + np.cumsum(np.bincount(idx, weights=dcount, minlength=lev.size))
    slope_after = np.where(np.rint(active) > 0, slope_after, 0.0)
    jump = np.bincount(np.searchsorted(lev, atoms), weights=aw, minlength=lev.size)
    # value just after 0: every spread mass except the part at exactly 0, and atoms away from 0
    m0 = float(np.sum(w[spread]) + np.sum(aw[atoms > 0]))
    drift = np.concatenate(([0.0], np.cumsum(slope_after[:-1] * np.diff(lev))))
    right = m0 + drift - np.concatenate(([0.0], np.cumsum(jump[1:])))
    left = right + jump
    return lev, np.maximum(left, 0.0), np.maximum(right, 0.0)


def interpolated_rearrangement(f):
    """Piecewise-linear ``f*`` of the interpolant of ``f`` in the mass coordinate.

    Only for spaces whose atoms are ordered along a line (the interval, the
    one-dimensional Gaussian, radial functions on a ball); returns None
    otherwise.  Between consecutive nodes ``f`` is taken linear in the
    cumulative mass, so each stretch spreads its mass uniformly over the
    values it sweeps, and the ends are extrapolated linearly.  The resulting
    distribution function is continuous and piecewise linear; its slope is
    the coarea sum over all components of a level set, which the sorted
    point samples only resolve up to interleaving noise.
    """
    if f.space is None or f.space.kind not in ("unit_interval", "gaussian1d", "euclidean_ball"):
        return None
    v, w = f.values, f.weights
    if v.size < 2:
        return None
    m = np.cumsum(w) - 0.5 * w
    s0 = (v[1] - v[0]) / (m[1] - m[0])
    s1 = (v[-1] - v[-2]) / (m[-1] - m[-2])
    a = np.concatenate((v[:-1], [v[0], v[-1]]))
    b = np.concatenate((v[1:], [v[0] - s0 * m[0], v[-1] + s1 * (1.0 - m[-1])]))
    mass = np.concatenate((0.5 * (w[:-1] + w[1:]), [0.5 * w[0], 0.5 * w[-1]]))
    lev, left, right = _spread_distribution(np.minimum(a, b), np.maximum(a, b), mass)
    s = np.concatenate([[r, l] for l, r in zip(left[::-1], right[::-1])])
    vals = np.repeat(lev[::-1], 2)
    order = np.argsort(s, kind="stable")
    return PiecewiseLinear(s[order], vals[order])


def model_rearrangement(f):
    """Piecewise-linear ``f*`` through exact level masses of the coordinate model.

    The model is ``f`` linear in the space coordinate between nodes, with
    Taylor-closed end cells (see ``smooth_oscillation``).  Returns None on
    spaces without an ordered coordinate.
    """
    if not supports_coordinate_model(f):
        return None
    s, v = coordinate_rearrangement(f)
    return PiecewiseLinear(s, v)
