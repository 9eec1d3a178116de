"""Both sides of the symmetrization, isoperimetric and Poincare inequalities.

Every verifier returns a :class:`VerificationReport` holding the evaluation
grid, the two sides, and the smallest relative margin
``(rhs - lhs) / max(rhs, 1e-12)``.  Where a theorem only asserts an
inequality up to an unspecified constant, the constant is fitted on the
data and reported; the pass criterion is then stability of that constant.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .capacity import Cap1Curve, capacitary_norm_LSq, muckenhoupt_check, propiedad_estimate, weight_curve
from .errors import ConvergenceError, DomainError, PreconditionError
from .measure_space import BorelSetApprox, get_profile, euclidean_profile, unit_ball_volume
from .quadrature import gauss_nodes
from .rearrangement import (interpolated_rearrangement, decreasing_rearrangement, hardy_littlewood_sup, linear_rearrangement,
                            model_rearrangement, smooth_oscillation)
from .ri_spaces import SpaceSpec, boyd_indices, norm, parse_space

__all__ = [
    "VerificationReport", "DEFAULT_GRID", "EPS", "relative_margins",
    "verify_oscillation", "verify_oscillation_concave", "verify_rearranged_gradient",
    "verify_capacitary_oscillation", "verify_poincare", "verify_gn_sharp",
    "verify_gaussian_isoperimetric", "recover_isoperimetry", "cheeger_check",
    "gradient_power_average", "convexified",
]

EPS = 1e-12
DEFAULT_GRID = np.geomspace(1e-4, 0.5, 64)


def relative_margins(lhs, rhs):
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    return (rhs - lhs) / np.maximum(rhs, EPS)


@dataclass
class VerificationReport:
    inequality_id: str
    grid: list
    lhs: list
    rhs: list
    resolution: int
    tol: float = 1e-2
    params: dict = field(default_factory=dict)
    notes: str = ""
    extra_pass: bool = True
    min_relative_margin: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.grid = [float(x) for x in np.atleast_1d(self.grid)]
        self.lhs = [float(x) for x in np.atleast_1d(self.lhs)]
        self.rhs = [float(x) for x in np.atleast_1d(self.rhs)]
        if not len(self.grid) == len(self.lhs) == len(self.rhs):
            raise ValueError("grid, lhs and rhs must have the same length")
        m = relative_margins(self.lhs, self.rhs)
        self.min_relative_margin = float(np.min(m)) if m.size else 0.0
        self.passed = bool(self.min_relative_margin >= -self.tol and self.extra_pass)

    def to_dict(self):
        return {
            "inequality_id": self.inequality_id,
            "params": _jsonable(self.params),
            "grid": self.grid,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "min_relative_margin": self.min_relative_margin,
            "passed": self.passed,
            "resolution": int(self.resolution),
            "notes": self.notes,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def curve_rows(self):
        m = relative_margins(self.lhs, self.rhs)
        return [(t, l, r, mm) for t, l, r, mm in zip(self.grid, self.lhs, self.rhs, m)]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (SpaceSpec,)):
        return str(obj)
    return obj


def _grid(grid):
    g = DEFAULT_GRID if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any((g <= 0) | (g >= 1)):
        raise DomainError("verification grid must lie in (0, 1)")
    return g


def gradient_power_average(f, q, t):
    """``((1/t) int_0^t (|grad f|*)^q)^{1/q}``."""
    g = f.gradient_function()
    g = g.replace(values=g.values ** q)
    return (hardy_littlewood_sup(g, t) / t) ** (1.0 / q)


# --------------------------------------------------------------------------
# oscillation inequalities


def verify_oscillation(f, I, q=1, tol=1e-2, grid=None):
    """``(f** - f*)(t) w_q(t) <= ((1/t) int_0^t (|grad f|*)^q)^{1/q}`` on the grid."""
    t = _grid(grid)
    w = weight_curve(I, q)
    lhs = smooth_oscillation(f, t) * w(t)
    rhs = gradient_power_average(f, q, t)
    return VerificationReport("oscillation", t, lhs, rhs, f.resolution, tol,
                              {"q": q, "profile": _name(I)})


def verify_oscillation_concave(f, I, tol=1e-2, grid=None):
    """The concave-profile form ``f** - f* <= (t / I(t)) |grad f|**(t)``."""
    t = _grid(grid)
    prof = get_profile(I)
    lhs = smooth_oscillation(f, t)
    rhs = t / prof(t) * gradient_power_average(f, 1, t)
    return VerificationReport("oscillation_concave", t, lhs, rhs, f.resolution, tol,
                              {"profile": _name(I)})


def _name(I):
    return I if isinstance(I, str) else getattr(I, "name", repr(I))


def _isoperimetric_slopes(f, I):
    """``(-f*)' I`` on the piecewise-linear surrogate, as (segment lengths, values).

    On each segment between consecutive knots the slope is measured in the
    coordinate ``u(s) = int ds / I(s)``, in which ``(-f*)' I = -d f*/du``.
    The first value is continued down to 0; past the last knot it is 0.
    """
    prof = get_profile(I)
    pl = model_rearrangement(f)
    if pl is None:
        pl = interpolated_rearrangement(f)
    if pl is None:
        pl = linear_rearrangement(f)
    s, v = pl.knots, pl.values
    if s.size < 2:
        return np.array([1.0]), np.array([0.0])
    x, wq = gauss_nodes(s[:-1], s[1:])
    du = np.sum(wq / prof(np.clip(x, 1e-300, 1 - 1e-16)), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(du > 0, (v[:-1] - v[1:]) / du, 0.0)
    lengths = np.concatenate(([s[0]], np.diff(s), [1.0 - s[-1]]))
    vals = np.concatenate(([g[0]], g, [0.0]))
    return lengths, vals


def verify_rearranged_gradient(f, I, q=1, t=None, tol=1e-2, grid=None):
    """``int_0^t [((-f*)' I)*]^q <= int_0^t (|grad f|*)^q``."""
    tt = _grid(grid if t is None else [t])
    lengths, vals = _isoperimetric_slopes(f, I)
    order = np.argsort(-vals, kind="stable")
    b = np.cumsum(lengths[order])
    h = vals[order] ** q
    cum = np.concatenate(([0.0], np.cumsum(h * lengths[order])))
    k = np.searchsorted(b, tt, side="right")
    start = np.concatenate(([0.0], b))[k]
    lhs = cum[k] + np.append(h, 0.0)[k] * (tt - start)
    g = f.gradient_function()
    rhs = hardy_littlewood_sup(g.replace(values=g.values ** q), tt)
    return VerificationReport("rearranged_gradient", tt, lhs, rhs, f.resolution, tol,
                              {"q": q, "profile": _name(I)})


def _fii_sides(f, I, q, t):
    """``int_0^t [(f** - f*) cap_1(s,1/2)/s]^q ds`` and ``int_0^t (|grad f|*)^q``."""
    c = Cap1Curve(I)
    pl = linear_rearrangement(f)
    order = np.argsort(-np.abs(f.values), kind="stable")
    w = f.weights[order]
    s = pl.knots
    edges = np.concatenate(([0.0], np.cumsum(w)))
    inside = s < 0.5
    h = np.zeros_like(s)
    osc = np.maximum(pl.average(s[inside]) - pl(s[inside]), 0.0)
    h[inside] = (osc * c(s[inside]) / s[inside]) ** q
    cum = np.concatenate(([0.0], np.cumsum(h * w)))
    t = np.atleast_1d(t)
    k = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, s.size - 1)
    lhs = cum[k] + h[k] * (t - edges[k])
    g = f.gradient_function()
    rhs = hardy_littlewood_sup(g.replace(values=g.values ** q), t)
    return lhs, rhs


def _is_constant(f):
    return bool(np.all(f.values == f.values[0]))


def verify_capacitary_oscillation(f, I, q, t=None, tol=1e-2, grid=None, refined=None,
                                  muckenhoupt=None):
    """Oscillation weighted by ``cap_1(s,1/2)/s`` against the gradient, with a fitted constant.

    Requires ``cap_1(s,1/2)/s`` to be a q-Muckenhoupt weight.  The fitted
    constant is ``max lhs/rhs`` on the grid; with ``refined`` (the same
    function at a higher resolution) the report passes only if the constant
    changes by at most a factor 2.
    """
    tt = _grid(grid if t is None else [t])
    tt = tt[tt < 0.5]
    if _is_constant(f):
        # both sides vanish; the weight condition is irrelevant
        z = np.zeros(tt.size)
        return VerificationReport("capacitary_oscillation", tt, z, z, f.resolution, tol,
                                  {"q": q, "profile": _name(I), "fitted_constant": 0.0},
                                  "constant function; Muckenhoupt precondition not checked")
    mk = muckenhoupt if muckenhoupt is not None else muckenhoupt_check(I, q)
    if not mk.satisfied:
        raise PreconditionError(
            f"Muckenhoupt check failed for profile {_name(I)}, q={q}: "
            f"sup {mk.constant:.4g} vs refined {mk.refined_constant:.4g}")
    lhs, rhs = _fii_sides(f, I, q, tt)
    ratio = lhs / np.maximum(rhs, EPS)
    C = float(np.max(ratio)) if ratio.size else 0.0
    params = {"q": q, "profile": _name(I), "fitted_constant": C,
              "muckenhoupt_constant": mk.constant}
    stable = True
    if refined is not None:
        l2, r2 = _fii_sides(refined, I, q, tt)
        C2 = float(np.max(l2 / np.maximum(r2, EPS)))
        params["fitted_constant_refined"] = C2
        if C > 0 or C2 > 0:
            stable = max(C, C2) <= 2 * min(C, C2)
    scale = max(C, EPS)
    return VerificationReport("capacitary_oscillation", tt, lhs, scale * rhs, f.resolution, tol,
                              params, "rhs scaled by the fitted constant", stable)


# --------------------------------------------------------------------------
# Poincare inequalities through capacitary norms


def convexified(X, q):
    X = parse_space(X)
    return X if q == 1 else SpaceSpec("convex", q=float(q), base=X)


def _poincare_terms(g, X, Y, I, q):
    c = g.centered()
    Xq, Yq = convexified(X, q), convexified(Y, q)
    A = norm(Yq, c)
    B = capacitary_norm_LSq(Xq, I, q, c)
    C = norm(Xq, g.gradient_function()) + c.l1()
    return A, B, C


def verify_poincare(g, X, Y, I, q, tol=1e-2, refined=None, boyd=None, propiedad=True):
    """Chain ``||g - mean||_{Y(q)} <~ ||g - mean||_{LS_q(X(q))} <~ ||grad g||_{X(q)} + ||g - mean||_1``.

    The upper Boyd index of X must be below 1.  Reports the two chained
    ratios; the ``Q_{w_q}`` boundedness estimate over a finite family is
    recorded as a lower bound for the operator norm.
    """
    lower, upper = boyd if boyd is not None else boyd_indices(X)
    # for a constant every term vanishes and the index condition is irrelevant
    if not upper < 1 - 1e-6 and not _is_constant(g):
        raise PreconditionError(f"upper Boyd index of {parse_space(X)} is {upper:.4g}, not < 1")
    A, B, C = _poincare_terms(g, X, Y, I, q)
    r1 = A / B if B > 0 else (0.0 if A == 0 else math.inf)
    r2 = B / C if C > 0 else (0.0 if B == 0 else math.inf)
    params = {"X": str(parse_space(X)), "Y": str(parse_space(Y)), "q": q, "profile": _name(I),
              "boyd_lower": lower, "boyd_upper": upper, "ratio_Y_over_LS": r1,
              "ratio_LS_over_gradient": r2, "terms": [A, B, C]}
    if propiedad:
        params["hardy_operator_norm_lower_bound"] = propiedad_estimate(I, q, X, Y)
    ok = math.isfinite(r1) and math.isfinite(r2)
    if refined is not None:
        A2, B2, C2 = _poincare_terms(refined, X, Y, I, q)
        s1 = A2 / B2 if B2 > 0 else 0.0
        s2 = B2 / C2 if C2 > 0 else 0.0
        params["refined_ratios"] = [s1, s2]
        for a, b in ((r1, s1), (r2, s2)):
            if max(a, b) > 2 * min(a, b):
                ok = False
    k1 = max(r1, EPS) if math.isfinite(r1) else 1.0
    k2 = max(r2, EPS) if math.isfinite(r2) else 1.0
    return VerificationReport("poincare", [0.0, 1.0], [A, B], [k1 * B, k2 * C], g.resolution, tol,
                              params, "grid indexes the two links; rhs scaled by fitted ratios", ok)


# --------------------------------------------------------------------------
# Euclidean and Gaussian isoperimetric forms


def verify_gn_sharp(f, tol=1e-2):
    """``||f||_{L(n',1)} <= n' / tau_n ||grad f||_1`` in Lebesgue measure on the ball.

    The Lorentz norm is evaluated as ``n'`` times the Lorentz norm with
    fundamental function ``t^{1/n'}``.
    """
    sp = f.space
    if sp is None or sp.kind != "euclidean_ball":
        raise DomainError("verify_gn_sharp needs a function on euclidean_ball")
    # f must vanish on the sphere: the outer annulus value has to be explained
    # by the gradient over the half-annulus between its midpoint and r = 1
    if abs(f.values[-1]) > f.grads[-1] * 0.5 / f.resolution * (1 + 1e-6) + 1e-14:
        raise PreconditionError("support touches the boundary of the ball (f does not vanish at r = 1)")
    n = sp.dimension
    nc = n / (n - 1.0)
    beta = unit_ball_volume(n)
    tau = float(euclidean_profile(n, 1.0))
    lam = norm(SpaceSpec("lorentz", phi=f"pow:{1.0 / nc!r}"), f)
    lhs = nc * beta ** (1.0 / nc) * lam
    grad = beta * f.gradient_mass()
    rhs = nc / tau * grad
    ratio = lhs / rhs if rhs > 0 else 0.0
    return VerificationReport("gn_sharp", [1.0], [lhs], [rhs], f.resolution, tol,
                              {"n": n, "ratio": ratio})


def verify_gaussian_isoperimetric(f, tol=1e-2, mode="exact"):
    """``int_0^inf I(mu_f(t)) dt <= ||grad f||_1`` with the Gaussian profile."""
    if f.space is not None and f.space.kind not in ("gaussian1d", "gaussian2d"):
        raise DomainError("the Gaussian form needs a function on gaussian1d or gaussian2d")
    phi = "gauss" if mode == "exact" else "gauss_asymptotic"
    lhs = norm(SpaceSpec("lorentz", phi=phi), f)
    rhs = f.gradient_mass()
    return VerificationReport("gaussian_isoperimetric", [1.0], [lhs], [rhs], f.resolution, tol,
                              {"profile_mode": mode})


def recover_isoperimetry(A: BorelSetApprox, I, tol=1e-3, steps=12, convergence_tol=0.05):
    """``I(t) (chi** - chi*)(t) <= mu+(A)`` for ``t`` decreasing to ``mu(A)``, then the limit.

    The mollifications must converge to the indicator in L1 with gradient
    mass not exceeding the perimeter in the limit; the finest one may exceed
    it by ``convergence_tol`` (relative), which absorbs the node-counting
    error of a narrow ramp.
    """
    prof = get_profile(I)
    masses = [m.gradient_mass() for m in A.indicator_mollifications]
    if not masses:
        raise ConvergenceError("no mollifications supplied")
    if masses[-1] > A.perimeter * (1 + convergence_tol) + EPS:
        raise ConvergenceError(
            f"gradient mass {masses[-1]:.6g} of the finest mollification exceeds the perimeter {A.perimeter:.6g}")
    mu = A.measure
    t = mu + (1.0 - mu) * 0.5 ** np.arange(1, steps + 1)
    lhs = prof(t) * mu / t
    # the same quantity along the finest mollification, for the record
    fin = A.indicator_mollifications[-1]
    fs = decreasing_rearrangement(fin)
    moll = prof(t) * (fs.integral(t) / t - fs(t))
    grid = np.append(t, mu)
    lhs = np.append(lhs, float(prof(np.array([mu]))[0]))
    rhs = np.full(grid.size, A.perimeter)
    return VerificationReport("isoperimetry", grid, lhs, rhs, fin.resolution, tol,
                              {"measure": mu, "perimeter": A.perimeter, "profile": _name(I),
                               "gradient_masses": masses, "widths": list(A.widths),
                               "mollified_lhs": list(moll)},
                              "last grid point is the limit t = mu(A)")


def cheeger_check(I, floor=1e-6, points=200):
    """``inf_{t <= 1/2} cap_1(t, 1/2) / t`` and whether it is positive and grid-stable."""
    c = Cap1Curve(I)

    def inf_on(lo, n):
        g = np.geomspace(lo, 0.5, n)
        return float(np.min(c(g) / g))

    k0 = inf_on(floor, points)
    k1 = inf_on(floor * 1e-2, 2 * points)
    holds = k0 > 0 and abs(k1 - k0) <= 0.05 * k0
    return k0, bool(holds)
