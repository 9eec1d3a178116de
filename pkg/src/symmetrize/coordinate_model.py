"""Oscillation ``f** - f*`` from a model of ``f`` in the space coordinate.

On the one-dimensional model spaces the sampled values are joined
linearly between nodes, and the end cells are closed by a quadratic
Taylor extension built from the node gradients.  Level-set measures of
this model are finite sums of closed-form cell masses, so its
rearrangement is exact.  This matters at small ``t``, where only a few
atoms carry ``f*`` and surrogates built from the atoms alone lose an
order of accuracy.
"""

import math

import numpy as np
from scipy.special import ndtr

__all__ = ["supports_coordinate_model", "coordinate_oscillation", "coordinate_rearrangement"]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TAIL_PIECES = 8
_MAX_ITER = 100
# Gaussian tails are carried out to this coordinate, where the mass is below 1e-18
_FAR = 9.0


class _Line:
    """Measure on a coordinate line: cdf ``F``, first moment ``M`` and density.

    An unbounded line is taken to be symmetric, so that ``F(-x)`` is the
    survival function.
    """

    def __init__(self, lower, upper, F, M, density):
        self.lower, self.upper = lower, upper
        self.F, self.M, self.density = F, M, density

    def mass(self, l, h):
        if np.isfinite(self.upper):
            return self.F(h) - self.F(l)
        # upper-tail cells from the survival function, which does not cancel
        return np.where(l > 0, self.F(-l) - self.F(-h), self.F(h) - self.F(l))

    def tail_span(self, x0, end):
        if np.isfinite(end):
            return abs(end - x0)
        # a couple of standard deviations of the conditional tail law
        return 2.0 / max(abs(x0), 1.0)


def _gaussian_line():
    return _Line(-np.inf, np.inf, ndtr,
                 lambda x: -_INV_SQRT_2PI * np.exp(-0.5 * x * x),
                 lambda x: _INV_SQRT_2PI * np.exp(-0.5 * x * x))


def _unit_line():
    c = lambda x: np.clip(x, 0.0, 1.0)
    return _Line(0.0, 1.0, c, lambda x: 0.5 * c(x) ** 2,
                 lambda x: np.where((x >= 0) & (x <= 1), 1.0, 0.0))


def _radial_line(n):
    c = lambda r: np.clip(r, 0.0, 1.0)
    return _Line(0.0, 1.0, lambda r: c(r) ** n, lambda r: n / (n + 1.0) * c(r) ** (n + 1),
                 lambda r: n * c(r) ** (n - 1))


def _line_for(f):
    sp = getattr(f, "space", None)
    if sp is None or sp.kind not in ("unit_interval", "gaussian1d", "euclidean_ball"):
        return None
    if sp.kind == "gaussian1d":
        return _gaussian_line()
    if sp.kind == "unit_interval":
        return _unit_line()
    return _radial_line(sp.dimension)


def supports_coordinate_model(f):
    """True when ``f`` carries increasing 1-d node coordinates on a supported space."""
    if _line_for(f) is None or f.points is None:
        return False
    x = np.asarray(f.points, dtype=float)
    return x.ndim == 1 and x.size == f.resolution >= 3 and bool(np.all(np.diff(x) > 0))


def _tail(x0, v0, s0, c, end, direction, line):
    d = direction * line.tail_span(x0, end) * np.arange(_TAIL_PIECES + 1) / _TAIL_PIECES
    if c != 0 and s0 != 0 and direction * (-s0 / c) > 0:
        # stop the curvature before the model turns back
        d = d[direction * d < direction * (-s0 / c)]
    v = v0 + s0 * d + 0.5 * c * d * d
    slope = s0 + c * d[-1]
    if not np.isfinite(end):
        # further knots on the tangent, so that level sets resolve small masses
        h = line.tail_span(x0, end) / _TAIL_PIECES
        n = max(int(np.ceil((_FAR - abs(x0 + d[-1])) / h)), 0)
        e = direction * h * np.arange(1, n + 1)
        d, v = np.concatenate((d, d[-1] + e)), np.concatenate((v, v[-1] + slope * e))
    return x0 + d, v, slope


def _pieces(f, line):
    """Cells ``[lo, hi]`` on which ``|f| = a + b x``, split at the zeros of ``f``."""
    x, v, g = np.asarray(f.points, dtype=float), f.values, f.grads
    sec = np.diff(v) / np.diff(x)
    # slope magnitudes come from the gradients, signs from the end secants
    sl, sr = np.sign(sec[0]), np.sign(sec[-1])
    xl, vl, el = _tail(x[0], v[0], sl * g[0], sl * (g[1] - g[0]) / (x[1] - x[0]),
                       line.lower, -1, line)
    xr, vr, er = _tail(x[-1], v[-1], sr * g[-1], sr * (g[-1] - g[-2]) / (x[-1] - x[-2]),
                       line.upper, 1, line)
    X = np.concatenate((xl[::-1], x[1:-1], xr))
    V = np.concatenate((vl[::-1], v[1:-1], vr))
    beta = np.concatenate(([el], np.diff(V) / np.diff(X), [er]))
    lo = np.concatenate(([line.lower], X))
    hi = np.concatenate((X, [line.upper]))
    anchor = np.concatenate(([X[0]], X[:-1], [X[-1]]))
    av = np.concatenate(([V[0]], V[:-1], [V[-1]]))
    alpha = av - beta * anchor
    with np.errstate(divide="ignore", invalid="ignore"):
        z = -alpha / beta
    cut = (beta != 0) & (z > lo) & (z < hi)
    lo = np.concatenate((lo[~cut], lo[cut], z[cut]))
    hi = np.concatenate((hi[~cut], z[cut], hi[cut]))
    a = np.concatenate((alpha[~cut], alpha[cut], alpha[cut]))
    b = np.concatenate((beta[~cut], beta[cut], beta[cut]))
    keep = hi > lo
    lo, hi, a, b = lo[keep], hi[keep], a[keep], b[keep]
    fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
    mid = np.where(fin_lo & fin_hi, 0.5 * (lo + hi), np.where(fin_lo, lo + 1.0, hi - 1.0))
    s = np.sign(a + b * mid)
    s[s == 0] = 1.0
    return lo, hi, s * a, s * b


def _end_values(a, b, x):
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(b == 0, a, a + b * x)


class _Model:
    """Level-set calculus of the piecewise model of ``|f|``."""

    def __init__(self, f):
        self.f = f
        self.line = line = _line_for(f)
        lo, hi, a, b = _pieces(f, line)
        self.lo, self.hi, self.a, self.b = lo, hi, a, b
        vlo, vhi = _end_values(a, b, lo), _end_values(a, b, hi)
        self.vmin, self.vmax = np.minimum(vlo, vhi), np.maximum(vlo, vhi)
        self.mass = mass = line.mass(lo, hi)
        integral = a * mass + b * (line.M(hi) - line.M(lo))
        # pieces lying wholly above a level, accumulated from the top
        order = np.argsort(self.vmin, kind="stable")
        self.vs = self.vmin[order]
        self.top_mass = np.concatenate(([0.0], np.cumsum(mass[order][::-1])))
        self.top_int = np.concatenate(([0.0], np.cumsum(integral[order][::-1])))
        self.bsafe = np.where(b != 0, b, 1.0)

    def _crossings(self, lam):
        """Index pairs (level, piece) with ``vmin <= lam < vmax``.

        Each piece crosses a contiguous run of the sorted levels, so the
        pairs come from two searches rather than a dense comparison.
        """
        order = np.argsort(lam, kind="stable")
        ls = lam[order]
        i0 = np.searchsorted(ls, self.vmin, side="left")
        cnt = np.maximum(np.searchsorted(ls, self.vmax, side="left") - i0, 0)
        pp = np.repeat(np.arange(cnt.size), cnt)
        offset = np.arange(pp.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        return order[np.repeat(i0, cnt) + offset], pp

    def levels(self, lam):
        """Mass above each level ``lam``, the excess integral above it and the mass slope."""
        a, b, line = self.a, self.b, self.line
        k = self.vs.size - np.searchsorted(self.vs, lam, side="right")
        D = self.top_mass[k].copy()
        E = self.top_int[k] - lam * self.top_mass[k]
        kk, pp = self._crossings(lam)
        xc = (lam[kk] - a[pp]) / self.bsafe[pp]
        up = b[pp] > 0
        l = np.where(up, xc, self.lo[pp])
        h = np.where(up, self.hi[pp], xc)
        m = line.mass(l, h)
        e = (a[pp] - lam[kk]) * m + b[pp] * (line.M(h) - line.M(l))
        K = lam.size
        D += np.bincount(kk, m, K)
        E += np.bincount(kk, e, K)
        dD = -np.bincount(kk, line.density(xc) / np.abs(self.bsafe[pp]), K)
        return D, E, dD

    def solve(self, t):
        """Levels ``f*(t)`` of the model, by safeguarded Newton on the distribution."""
        from .rearrangement import linear_rearrangement

        lam = np.maximum(linear_rearrangement(self.f.abs())(t), 0.0)
        top = float(np.max(np.abs(self.f.values)))
        blo, bhi = np.zeros_like(t), np.full_like(t, np.inf)
        for _ in range(_MAX_ITER):
            D, E, dD = self.levels(lam)
            r = D - t
            blo = np.where(r > 0, np.maximum(blo, lam), blo)
            bhi = np.where(r <= 0, np.minimum(bhi, lam), bhi)
            root = np.abs(r) <= 1e-13 * t
            narrow = np.isfinite(bhi) & (bhi - blo <= 4 * np.finfo(float).eps * bhi)
            if np.all(root | narrow):
                break
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                new = lam - r / dD
            fallback = np.where(np.isfinite(bhi), 0.5 * (blo + bhi), np.maximum(2 * lam, top + 1.0))
            lam = np.where(np.isfinite(new) & (new > blo) & (new < bhi), new, fallback)
        # off a root t sits in a jump of the distribution; the level is its top
        return np.where(root | ~np.isfinite(bhi), lam, bhi)

    def knots(self):
        """``(s, f*(s))`` at every finite piece-end level, ``s`` increasing."""
        ends = np.concatenate((self.vmin, self.vmax))
        lev = np.unique(ends[np.isfinite(ends)])[::-1]
        right = self.levels(lev)[0]
        # flat pieces make the distribution jump; f* is constant across the jump
        flat = self.vmin == self.vmax
        idx = np.searchsorted(-lev, -self.vmin[flat])
        left = right + np.bincount(idx, self.mass[flat], lev.size)
        s = np.clip(np.column_stack((right, left)).ravel(), 0.0, 1.0)
        v = np.repeat(lev, 2)
        keep = np.concatenate(([True], np.diff(s) > 0))
        return s[keep], v[keep]


def coordinate_oscillation(f, t):
    """``f** - f*`` at the points ``t`` (already validated, in ``(0, 1)``)."""
    model = _Model(f)
    shape = np.shape(t)
    t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    lam = model.solve(t)
    E = model.levels(lam)[1]
    d = E / t
    # cancellation noise is not oscillation
    d = np.where(d > 64 * np.finfo(float).eps * (np.abs(lam) + np.abs(d)), d, 0.0)
    return d.reshape(shape)


def coordinate_rearrangement(f):
    """Knots ``(s, f*(s))`` of the model rearrangement at every level of a model node."""
    return _Model(f).knots()
