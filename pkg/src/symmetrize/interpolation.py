"""The (L^1, L^inf) K-functional, optimal truncations and interpolation norms.

For this couple ``K(t, f) = int_0^min(t,1) f*`` and ``dK/dt = f*(t)``; the
derivative is always taken from this identity, never by differencing.
"""

import csv
from dataclasses import dataclass
import math

import numpy as np

from .errors import DivergenceError, DomainError
from .inequalities import VerificationReport, EPS
from .measure_space import SampledFunction, euclidean_profile, median, unit_ball_volume
from .quadrature import gauss_nodes, integrate
from .rearrangement import decreasing_rearrangement, hardy_littlewood_sup, linear_rearrangement
from .ri_spaces import SpaceSpec, norm

__all__ = [
    "k_functional", "KFunctionalCurve", "k_curve", "Decomposition", "optimal_decomposition",
    "truncation_gradient_bound", "theta_q_norm", "reiteration_check",
    "derive_oscillation_from_gn", "gaussian_log_ratio",
]


def k_functional(f, t):
    """``K(t, f; L^1, L^inf) = int_0^min(t,1) f*``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("K-functional needs t > 0")
    return decreasing_rearrangement(f).integral(np.minimum(t, 1.0))


@dataclass(frozen=True, eq=False)
class KFunctionalCurve:
    t: np.ndarray
    K: np.ndarray
    dK: np.ndarray
    residual: np.ndarray

    def check(self, tol=1e-10):
        """Monotone, midpoint-concave, and ``K(t)/t`` non-increasing on the grid."""
        t, K = self.t, self.K
        scale = max(float(np.max(np.abs(K))), 1.0)
        if np.any(np.diff(K) < -tol * scale):
            return False
        r = K / t
        if np.any(np.diff(r) > tol * max(float(np.max(np.abs(r))), 1.0)):
            return False
        return True

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "K", "K_over_t", "dK_dt", "identity_residual"])
        for row in zip(self.t, self.K, self.K / self.t, self.dK, self.residual):
            w.writerow([repr(float(x)) for x in row])


def k_curve(f, grid):
    grid = np.asarray(grid, dtype=float)
    fs = decreasing_rearrangement(f)
    K = fs.integral(np.minimum(grid, 1.0))
    dK = np.where(grid < 1, fs(np.minimum(grid, 1.0)), 0.0)
    # K(t) = ||(|f| - f*(t))_+||_1 + t f*(t), summed over the atoms directly
    a = np.abs(f.values)
    excess = np.array([np.dot(np.maximum(a - d, 0.0), f.weights) for d in dK])
    residual = K - (excess + np.minimum(grid, 1.0) * dK)
    return KFunctionalCurve(grid, K, dK, residual)


def midpoint_concave(f, grid, tol=1e-10):
    """Midpoint concavity of ``K(., f)`` on consecutive triples of ``grid``."""
    g = np.sort(np.asarray(grid, dtype=float))
    a, b = g[:-2], g[2:]
    K = lambda x: k_functional(f, x)
    gap = K(0.5 * (a + b)) - 0.5 * (K(a) + K(b))
    return bool(np.all(gap >= -tol * max(1.0, float(np.max(np.abs(K(g)))))))


@dataclass(frozen=True, eq=False)
class Decomposition:
    t: float
    D0: SampledFunction
    D1: SampledFunction
    level: float


def optimal_decomposition(f, t):
    """``D0 = sign(f) (|f| - f*(t))_+`` and ``D1 = f - D0``."""
    if not 0 < t < 1:
        raise DomainError("decomposition needs t in (0, 1)")
    level = float(decreasing_rearrangement(f)(t))
    a = np.abs(f.values)
    d0 = np.sign(f.values) * np.maximum(a - level, 0.0)
    d1 = f.values - d0
    return Decomposition(t, f.replace(values=d0, label="D0"), f.replace(values=d1, label="D1"), level)


def truncation_gradient_bound(f, t):
    """Gradient mass on ``{|f| > f*(t)}`` against ``int_0^t |grad f|*``."""
    if not 0 < t <= 1:
        raise DomainError("t must lie in (0, 1]")
    level = float(decreasing_rearrangement(f)(t)) if t < 1 else 0.0
    on = np.abs(f.values) > level
    lhs = float(np.dot(f.grads[on], f.weights[on]))
    rhs = float(hardy_littlewood_sup(f.gradient_function(), t))
    return lhs, rhs


def theta_q_norm(f, theta, q=math.inf):
    """Lions-Peetre norm ``(int_0^inf (t^-theta K(t))^q dt/t)^{1/q}`` (sup for q = inf)."""
    if not 0 < theta < 1:
        raise DomainError("theta must lie in (0, 1)")
    if q < 1:
        raise DomainError("q must be >= 1")
    fs = decreasing_rearrangement(f)
    if fs.breaks.size == 0:
        return 0.0
    c = fs.breaks
    c0 = fs.starts
    a = fs.values
    K_end = np.cumsum(a * fs.lengths)
    alpha = K_end - a * c  # K(t) = alpha + a t on piece k
    if math.isinf(q):
        cands = [K_end * c ** -theta]
        # interior critical point of t^-theta (alpha + a t)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tc = theta * alpha / (a * (1.0 - theta))
        ok = (a > 0) & (tc > c0) & (tc < c)
        if np.any(ok):
            cands.append(tc[ok] ** -theta * (alpha[ok] + a[ok] * tc[ok]))
        return float(max(np.max(x) for x in cands))
    # first piece (alpha = 0): closed form; then 8-point rule per piece; then t > 1
    e = (1.0 - theta) * q
    total = a[0] ** q * c[0] ** e / e
    if c.size > 1:
        # pieces where f* = 0 have constant K and integrate in closed form
        flat = a[1:] == 0
        lo, hi, al = c0[1:][flat], c[1:][flat], alpha[1:][flat]
        total += float(np.sum(al ** q * (lo ** -(theta * q) - hi ** -(theta * q)))) / (theta * q)
        k = np.flatnonzero(~flat) + 1
        if k.size:
            # geometric panels of ratio <= 1.25 keep the rule accurate on long pieces
            m = np.maximum(1, np.ceil(np.log(c[k] / c0[k]) / math.log(1.25)).astype(int))
            piece = np.repeat(k, m)
            j = np.arange(piece.size) - np.repeat(np.cumsum(m) - m, m)
            mm = np.repeat(m, m)
            ratio = c[piece] / c0[piece]
            lo = c0[piece] * ratio ** (j / mm)
            hi = c0[piece] * ratio ** ((j + 1) / mm)
            x, w = gauss_nodes(lo, hi)
            vals = (x ** -theta * (alpha[piece, None] + a[piece, None] * x)) ** q / x
            total += float(np.sum(w * vals))
    total += K_end[-1] ** q / (theta * q)
    if not math.isfinite(total):
        raise DivergenceError("theta-q integral is not finite")
    return total ** (1.0 / q)


def _off_breaks(x, fs):
    """Move points that sit on a breakpoint of ``f*`` half a cell to the right."""
    x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    b = fs.breaks
    k = np.searchsorted(b, x)
    for i, (xi, ki) in enumerate(zip(x, k)):
        if ki < b.size and abs(b[ki] - xi) <= 1e-12 * max(1.0, xi):
            nxt = b[ki + 1] if ki + 1 < b.size else 1.0
            x[i] = 0.5 * (b[ki] + nxt)
    return x


def reiteration_check(f, t, s=None, theta=0.5, tol=1e-10):
    """``K(s, D0(t) f) >= s (f**(s) - f*(s))`` for ``s <= t``, and the
    ``theta, infinity`` norm of ``D0(t) f`` against ``s^-theta s (f** - f*)(s)``.

    Points landing on a breakpoint of ``f*`` are moved half a cell to the right.
    """
    if not 0 < t < 1:
        raise DomainError("t must lie in (0, 1)")
    fs = decreasing_rearrangement(f)
    t = float(_off_breaks(t, fs)[0])
    if s is None:
        s = np.geomspace(min(1e-4, t), t, 24)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s <= 0) | (s > t + 1e-15)):
        raise DomainError("reiteration needs 0 < s <= t")
    s = np.minimum(_off_breaks(s, fs), t)
    D0 = optimal_decomposition(f, t).D0
    lower = fs.integral(s) - s * fs(s)
    kd0 = decreasing_rearrangement(D0).integral(s)
    nrm = theta_q_norm(D0, theta) if np.any(D0.values) else 0.0
    weak = s ** -theta * lower
    weak_margin = float(np.min((nrm - weak) / np.maximum(nrm, EPS)))
    return VerificationReport("reiteration", s, lower, kd0, f.resolution, tol,
                              {"t": t, "theta": theta, "theta_inf_norm_D0": nrm,
                               "weak_form_margin": weak_margin},
                              "points on breakpoints of f* moved half a cell right",
                              weak_margin >= -tol)


def derive_oscillation_from_gn(f, strong=False, tol=1e-2, grid=None):
    """Oscillation bounds obtained from Gagliardo-Nirenberg by truncation.

    Works in Lebesgue measure on the ball (``t = beta_n s`` for mass
    fraction ``s``).  Weak form: ``t^{-1/n} (f** - f*)(t) <= (1/tau_n) |grad f|**(t)``
    with the sharp isoperimetric constant.  Strong form:
    ``int_0^t (f** - f*)(u) u^{-1/n} du <= C t |grad f|**(t)`` with C fitted.
    """
    sp = f.space
    if sp is None or sp.kind != "euclidean_ball":
        raise DomainError("needs a function on euclidean_ball")
    if abs(f.values[-1]) > f.grads[-1] * 0.5 / f.resolution * (1 + 1e-6) + 1e-14:
        raise DomainError("f does not vanish at the boundary of the ball")
    n = sp.dimension
    beta = unit_ball_volume(n)
    tau = float(euclidean_profile(n, 1.0))
    s = np.geomspace(1e-3, 0.9, 48) if grid is None else np.asarray(grid, dtype=float)
    pl = linear_rearrangement(f)
    osc = lambda u: np.maximum(pl.average(u) - pl(u), 0.0)
    g = f.gradient_function()
    gint = hardy_littlewood_sup(g, s)  # int_0^s |grad f|* in mass units
    if not strong:
        lhs = (beta * s) ** (-1.0 / n) * osc(s)
        base = gint / s
        fitted = float(np.max(lhs / np.maximum(base, EPS))) if np.any(base > 0) else 0.0
        return VerificationReport("gn_interpolation_weak", s, lhs, base / tau, f.resolution, tol,
                                  {"n": n, "fitted_constant": fitted, "sharp_constant": 1.0 / tau},
                                  "grid in mass fraction; rhs uses the sharp constant 1/tau_n")
    lhs = np.array([beta ** (1.0 - 1.0 / n) * integrate(lambda u: osc(u) * u ** (-1.0 / n), 1e-12, si)
                    for si in s])
    base = beta * gint
    fitted = float(np.max(lhs / np.maximum(base, EPS))) if np.any(base > 0) else 0.0
    C = max(fitted, EPS)
    return VerificationReport("gn_interpolation_strong", s, lhs, C * base, f.resolution, tol,
                              {"n": n, "fitted_constant": fitted},
                              "grid in mass fraction; rhs scaled by the fitted constant",
                              math.isfinite(fitted))


def gaussian_log_ratio(f):
    """``||f - med f||`` in the Lorentz space with ``phi = t sqrt(log(e/t))`` over ``||grad f||_1``."""
    g = f.replace(values=f.values - median(f))
    num = norm(SpaceSpec("lorentz", phi="tlog"), g)
    den = f.gradient_mass()
    return num / den if den > 0 else (0.0 if num == 0 else math.inf)
