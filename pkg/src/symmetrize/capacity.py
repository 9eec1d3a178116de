"""Capacity profiles, the weights w_q and capacitary Hardy operators.

Capacities are obtained from the isoperimetric profile through the
one-dimensional formulas: ``cap_1(a, b) = inf_[a,b] I`` and, for q > 1,
the lower bound ``(int_a^b ds / (inf_[s,b] I)^q')^{-1/q'}``.  Infima over
intervals are grid minimisations with the endpoints included; profiles are
assumed unimodal or monotone between grid points.
"""

import csv
from dataclasses import dataclass
import math

import numpy as np

from .errors import DivergenceError, DomainError
from .measure_space import SampledFunction, get_profile
from .quadrature import FLOOR, CumulativeIntegral, gauss_nodes, integrate, panel_edges
from .rearrangement import linear_rearrangement
from .ri_spaces import norm

__all__ = [
    "cap1", "capq_lower", "CapacityProfile", "WeightCurve", "weight_curve", "weight_wq",
    "Cap1Curve", "capacitary_hardy_Qwq", "capacitary_hardy_Qcap1",
    "capacitary_norm_LSq", "weighted_oscillation", "muckenhoupt_check", "MuckenhouptResult",
    "propiedad_estimate", "write_curve_csv",
]

_DENSE = 4097


def _conj(q):
    return math.inf if q == 1 else q / (q - 1.0)


def _interval_grid(a, b, extra=()):
    pts = [np.linspace(a, b, _DENSE), np.asarray(extra, dtype=float).ravel(), [a, b]]
    if a > 0:
        pts.append(np.geomspace(a, b, _DENSE))
    if b < 1:
        pts.append(1.0 - np.geomspace(1.0 - b, 1.0 - a, _DENSE))
    g = np.unique(np.concatenate(pts))
    return g[(g >= a) & (g <= b)]


def cap1(I, a, b):
    """``inf_{a <= t <= b} I(t)``: the 1-capacity of the level-set pair (a, b)."""
    if not (0 < a < 1 and 0 < b < 1):
        raise DomainError("cap1 needs 0 < a, b < 1")
    if a > b:
        raise DomainError("cap1 needs a <= b")
    I = get_profile(I)
    if a == b:
        return float(I(np.array([a]))[0])
    g = _interval_grid(a, b)
    return float(np.min(I(g)))


def _suffix_min(I, nodes, b):
    """``inf_{[s, b]} I`` at every node ``s <= b`` (grid plus the nodes themselves)."""
    nodes = np.asarray(nodes, dtype=float)
    lo = float(np.min(nodes))
    g = _interval_grid(lo, b, nodes)
    vals = I(g)
    smin = np.minimum.accumulate(vals[::-1])[::-1]
    idx = np.searchsorted(g, nodes)
    return smin[idx]


def capq_lower(I, q, a, b):
    """Lower bound for ``cap_q(a, b)``, q > 1, from the one-dimensional formula."""
    if q <= 1:
        raise DomainError("capq_lower needs q > 1")
    if not (0 < a <= b < 1):
        raise DomainError("capq_lower needs 0 < a <= b < 1")
    if a == b:
        return math.inf
    I = get_profile(I)
    qc = _conj(q)
    e = panel_edges(a, b)
    x, w = gauss_nodes(e[:-1], e[1:])
    m = _suffix_min(I, x.ravel(), b).reshape(x.shape)
    with np.errstate(divide="ignore"):
        val = float(np.sum(w * m ** -qc))
    if not math.isfinite(val):
        bad = x.ravel()[np.argmin(m.ravel())]
        raise DivergenceError(f"capacity integral diverges near s={bad:.6g}")
    return val ** (-1.0 / qc)


@dataclass(frozen=True, eq=False)
class CapacityProfile:
    """``(a, b) -> cap_q(a, b)`` for a profile; provenance records how it is obtained."""

    profile: object
    q: float = 1.0

    @property
    def provenance(self):
        return "exact-from-I" if self.q == 1 else "lower-bound-mazya"

    def __call__(self, a, b):
        if self.q == 1:
            return cap1(self.profile, a, b)
        return capq_lower(self.profile, self.q, a, b)

    def to_csv(self, fh, pairs):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "value"])
        for a, b in pairs:
            w.writerow([repr(float(a)), repr(float(b)), repr(float(self(a, b)))])


class WeightCurve:
    """``t -> w_q(t)`` for a profile.

    For q > 1 the running integral of ``(s/I(s))^q'`` is tabulated once.
    For q = 1 the infimum of ``I(s)/s`` runs over the same quadrature nodes
    (plus ``t`` itself), which makes ``w_1 <= w_q`` hold exactly on the
    discrete level, as it does for the continuous definitions.
    """

    def __init__(self, I, q, floor=FLOOR):
        if q < 1:
            raise DomainError("w_q needs q >= 1")
        self.profile = get_profile(I)
        self.q = float(q)
        self.floor = floor
        I = self.profile
        if q == 1:
            self._ratio = lambda s: I(s) / s
            self._cum = CumulativeIntegral(self._ratio, floor=floor, check=False)
            flat = np.concatenate(([floor], self._cum.nodes.ravel()))
            vals = np.concatenate(([float(self._ratio(np.array([floor]))[0])],
                                   self._cum.node_values.ravel()))
            self._prefix = np.minimum.accumulate(vals)
            self._flat = flat
        else:
            qc = _conj(q)
            self._cum = CumulativeIntegral(lambda s: (s / I(s)) ** qc, floor=floor)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if np.any((t <= 0) | (t >= 1)):
            raise DomainError("w_q needs t in (0, 1)")
        if np.any(t < self.floor):
            raise DivergenceError(f"w_q requested below the quadrature floor {self.floor:g}")
        if self.q == 1:
            k, x, _ = self._cum.partial(t)
            # nodes of complete panels below t: the first 1 + 8k entries
            upto = self._prefix[8 * k]
            out = np.minimum(upto, np.min(self._ratio(x), axis=-1))
            out = np.minimum(out, self._ratio(t))
        else:
            qc = _conj(self.q)
            out = (self._cum(t) / t) ** (-1.0 / qc)
        if not np.all(np.isfinite(out) & (out > 0)):
            raise DivergenceError("w_q is not finite and positive on the grid")
        return float(out[0]) if scalar else out

    def to_csv(self, fh, grid):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(grid, self(np.asarray(grid, dtype=float))):
            w.writerow([repr(float(t)), repr(float(v))])


_WEIGHT_CACHE = {}


def weight_curve(I, q):
    """Shared WeightCurve for a named profile (built once; read-only afterwards)."""
    key = (I if isinstance(I, str) else id(I), float(q))
    curve = _WEIGHT_CACHE.get(key)
    if curve is None:
        curve = WeightCurve(I, q)
        _WEIGHT_CACHE.setdefault(key, curve)
    return curve


def weight_wq(I, q, t):
    return weight_curve(I, q)(t)


class Cap1Curve:
    """``s -> cap_1(s, b)`` for ``s`` in (0, b], as a suffix minimum of I."""

    def __init__(self, I, b=0.5, floor=FLOOR):
        self.profile = get_profile(I)
        self.b = b
        self.grid = _interval_grid(floor, b)
        self.smin = np.minimum.accumulate(self.profile(self.grid)[::-1])[::-1]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s <= 0) | (s > self.b)):
            raise DomainError(f"cap_1(s, {self.b}) needs 0 < s <= {self.b}")
        idx = np.clip(np.searchsorted(self.grid, s, side="left"), 0, self.grid.size - 1)
        return np.minimum(self.profile(s), self.smin[idx])


def _integrate_step(g, kernel, t, upper):
    """``int_t^upper g(s) kernel(s) ds`` for a step function g, piece by piece."""
    edges = np.concatenate(([0.0], g.breaks, [np.inf]))
    vals = np.append(g.values, g.tail)
    total = 0.0
    for lo, hi, v in zip(edges[:-1], edges[1:], vals):
        lo, hi = max(lo, t), min(hi, upper)
        if hi > lo and v != 0:
            total += v * integrate(kernel, lo, hi)
    if not math.isfinite(total):
        raise DivergenceError("capacitary Hardy integral is not finite")
    return total


def capacitary_hardy_Qwq(I, q, g, t):
    """``int_t^1 g(s) ds / (s w_q(s))``."""
    if not 0 < t < 1:
        raise DomainError("Q_{w_q} needs t in (0, 1)")
    w = weight_curve(I, q)
    return _integrate_step(g, lambda s: 1.0 / (s * w(s)), t, 1.0 - FLOOR)


def capacitary_hardy_Qcap1(I, g, t):
    """``int_t^{1/2} g(s) ds / cap_1(s, 1/2)``."""
    if not 0 < t < 0.5:
        raise DomainError("Q_{cap_1} needs t in (0, 1/2)")
    c = Cap1Curve(I)
    return _integrate_step(g, lambda s: 1.0 / c(s), t, 0.5)


def weighted_oscillation(f, weight):
    """``(f** - f*)(s) * weight(s)`` at the mass midpoints of the atoms.

    Returned as a sampled function on the unit interval whose cells are the
    atom masses, ready to be measured in any r.i. norm.
    """
    g = linear_rearrangement(f)
    s = g.knots
    osc = np.maximum(g.average(s) - g(s), 0.0)
    vals = osc * weight(s)
    if not np.all(np.isfinite(vals)):
        raise DivergenceError("weighted oscillation is not finite near 0")
    order = np.argsort(-np.abs(f.values), kind="stable")
    return SampledFunction(vals, f.weights[order], np.zeros_like(vals), label="weighted oscillation")


def capacitary_norm_LSq(X, I, q, f):
    """``||(f** - f*) w_q||`` in the representation space of X."""
    w = weight_curve(I, q)
    return norm(X, weighted_oscillation(f, w))


@dataclass(frozen=True)
class MuckenhouptResult:
    constant: float
    satisfied: bool
    refined_constant: float
    grid_min: float


def _muck_values(I, q, grid):
    c = Cap1Curve(I)
    grid = np.asarray(grid, dtype=float)
    if q == 1:
        out = []
        for t in grid:
            num = integrate(lambda s: c(s) / (s * s), t, 0.5)
            out.append(num / (float(c(np.array([t]))[0]) / t))
        return np.array(out)
    qc = _conj(q)
    left = CumulativeIntegral(lambda s: (s / c(np.minimum(s, 0.5))) ** qc, hi=0.5)
    out = []
    for t in grid:
        a = integrate(lambda s: (c(s) / s) ** q / s ** q, t, 0.5) ** (1.0 / q)
        b = float(left(np.array([t]))[0]) ** (1.0 / qc)
        out.append(a * b)
    return np.array(out)


def muckenhoupt_check(I, q, grid=None, stability=0.05):
    """Supremum of the two-factor Muckenhoupt expression over a log grid in (0, 1/2).

    The check is repeated on a refined grid (twice the points, floor pushed
    two decades lower); the weight is accepted when both suprema are finite
    and agree within ``stability``.
    """
    if grid is None:
        grid = np.geomspace(1e-6, 0.45, 64)
    grid = np.asarray(grid, dtype=float)
    if np.any((grid <= 0) | (grid >= 0.5)):
        raise DomainError("Muckenhoupt grid must lie in (0, 1/2)")
    lo, hi = float(grid.min()), float(grid.max())
    fine = np.geomspace(lo * 1e-2, hi, 2 * grid.size)
    c0 = float(np.max(_muck_values(I, q, grid)))
    c1 = float(np.max(_muck_values(I, q, fine)))
    ok = math.isfinite(c0) and math.isfinite(c1) and abs(c1 - c0) <= stability * c0
    return MuckenhouptResult(c0, bool(ok), c1, lo)


def propiedad_estimate(I, q, X, Y, resolution=2048):
    """Largest ``||Q_{w_q} h||_{Y^(q)} / ||h||_{X^(q)}`` over a finite family of
    positive h supported in (0, 1/2).

    Only a lower bound for the operator norm: the family is indicators of
    ``(0, u)`` and truncated powers ``s^-1/4 chi_(0,u)``.
    """
    from .ri_spaces import parse_space, SpaceSpec

    Xq = SpaceSpec("convex", q=float(q), base=parse_space(X)) if q != 1 else parse_space(X)
    Yq = SpaceSpec("convex", q=float(q), base=parse_space(Y)) if q != 1 else parse_space(Y)
    w = weight_curve(I, q)
    edges = np.concatenate(([0.0], np.geomspace(1e-8, 0.5, resolution // 2),
                            np.linspace(0.5, 1.0, resolution // 2 + 1)[1:]))
    mid = 0.5 * (edges[:-1] + edges[1:])
    lengths = np.diff(edges)
    kernel_cum = CumulativeIntegral(lambda s: 1.0 / (s * w(s)), hi=1 - FLOOR, check=False)
    best = 0.0
    for u in np.geomspace(1e-4, 0.5, 12):
        for theta in (0.0, 0.25):
            h = np.where(mid < u, np.maximum(mid, 1e-12) ** -theta, 0.0)
            # Q h(t) = int_t^u h(s) ds/(s w(s)); h is constant up to the cell size
            K = kernel_cum(np.clip(edges[1:], FLOOR, 1 - FLOOR))
            Kt = kernel_cum(np.clip(mid, FLOOR, 1 - FLOOR))
            contrib = h * (K - np.concatenate(([K[0]], K[:-1])))
            tail = np.cumsum(contrib[::-1])[::-1]
            Qh = np.where(mid < u, h * (K - Kt) + np.append(tail[1:], 0.0), 0.0)
            wts = lengths / lengths.sum()
            fh = SampledFunction(h, wts, np.zeros_like(h))
            fq = SampledFunction(np.maximum(Qh, 0.0), wts, np.zeros_like(h))
            den = norm(Xq, fh)
            if den > 0:
                best = max(best, norm(Yq, fq) / den)
    return best


def write_curve_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
