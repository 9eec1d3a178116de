"""Rearrangement-invariant norms evaluated through decreasing rearrangements.

Supported spaces: L^p, Lorentz Lambda(phi), Lambda_q(phi), Marcinkiewicz
M(phi) and q-convexifications of any of them.  Every norm is a closed-form
sum over the step rearrangement of the sampled function.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize

from .errors import DivergenceError, DomainError
from .expr import compile_expression
from .measure_space import SampledFunction, gaussian_profile, indicator
from .rearrangement import MonotoneStep, decreasing_rearrangement

__all__ = [
    "SpaceSpec", "FundamentalFunction", "parse_space", "get_phi", "norm",
    "fundamental_function", "lorentz_p1_norm", "hardy_P", "hardy_Q",
    "dilation_norm", "boyd_indices", "q_concavity_proxy", "step_to_function",
]


# --------------------------------------------------------------------------
# fundamental functions


def _tlog(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = t * np.sqrt(np.log(math.e / t))
    return np.where(t > 0, out, 0.0)


def _profile_phi(mode):
    def phi(t):
        t = np.asarray(t, dtype=float)
        inner = (t > 0) & (t < 1)
        out = np.zeros_like(t)
        out[inner] = gaussian_profile(t[inner], mode)
        return out
    return phi


def get_phi(name):
    """Named fundamental functions, or an expression in ``t``.

    ``sqrt``, ``id``, ``pow:a`` (t**a), ``tlog`` (t*sqrt(log(e/t))),
    ``gauss`` / ``gauss_asymptotic`` (Gaussian profile, 0 at the endpoints).
    """
    if callable(name):
        return name
    key, _, arg = str(name).partition(":")
    if key == "sqrt":
        return np.sqrt
    if key == "id":
        return lambda t: np.asarray(t, dtype=float).copy()
    if key == "pow":
        a = float(arg)
        return lambda t: np.asarray(t, dtype=float) ** a
    if key == "tlog":
        return _tlog
    if key == "gauss":
        return _profile_phi("exact")
    if key == "gauss_asymptotic":
        return _profile_phi("asymptotic")
    expr = compile_expression(name)
    if expr.variables - {"t"}:
        raise DomainError(f"phi expression may only use t: {name!r}")
    return lambda t: expr(t=t)


def _phi_exponent(name):
    """Exponent a when phi is exactly t**a, else None."""
    key, _, arg = str(name).partition(":")
    return {"sqrt": 0.5, "id": 1.0}.get(key, float(arg) if key == "pow" else None)


@dataclass(frozen=True, eq=False)
class FundamentalFunction:
    evaluate: object
    name: str = ""

    def __call__(self, t):
        return self.evaluate(t)

    def validate(self, grid):
        """``phi(0) = 0`` and ``phi`` non-decreasing and finite on ``grid``."""
        grid = np.sort(np.asarray(grid, dtype=float))
        vals = np.asarray(self(grid), dtype=float)
        if abs(float(self(np.array([0.0]))[0])) > 1e-12:
            raise DomainError(f"{self.name}: phi(0) != 0")
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"{self.name}: phi not finite on the grid")
        if np.any(np.diff(vals) < -1e-12):
            raise DomainError(f"{self.name}: phi decreases on the grid")
        return True


# --------------------------------------------------------------------------
# space descriptors


@dataclass(frozen=True)
class SpaceSpec:
    tag: str
    p: float = None
    phi: str = None
    q: float = None
    base: "SpaceSpec" = None
    average: bool = False

    def __post_init__(self):
        if self.tag not in ("lp", "lorentz", "lorentzq", "marcinkiewicz", "convex"):
            raise DomainError(f"unknown space tag {self.tag!r}")
        if self.tag == "lp" and not (self.p is not None and self.p >= 1):
            raise DomainError("L^p needs p >= 1")
        if self.tag in ("lorentzq", "convex") and not (self.q is not None and self.q >= 1):
            raise DomainError(f"{self.tag} needs q >= 1")
        if self.tag in ("lorentz", "lorentzq", "marcinkiewicz") and self.phi is None:
            raise DomainError(f"{self.tag} needs phi")
        if self.tag == "convex" and self.base is None:
            raise DomainError("convex needs a base space")

    def __str__(self):
        if self.tag == "lp":
            return "lp:inf" if math.isinf(self.p) else f"lp:{self.p:g}"
        if self.tag == "lorentz":
            return f"lorentz:phi={self.phi}"
        if self.tag == "lorentzq":
            return f"lorentzq:phi={self.phi},q={self.q:g}"
        if self.tag == "marcinkiewicz":
            return f"marcinkiewicz:phi={self.phi}" + (",max=1" if self.average else "")
        return f"convex:base={self.base},q={self.q:g}"


def _kv(body):
    out = {}
    for part in body.split(","):
        k, sep, v = part.partition("=")
        if not sep:
            raise DomainError(f"expected key=value, got {part!r}")
        out[k.strip()] = v.strip()
    return out


def parse_space(text):
    """Parse ``lp:2``, ``lorentz:phi=sqrt``, ``lorentzq:phi=sqrt,q=2``,
    ``marcinkiewicz:phi=tlog[,max=1]`` or ``convex:base=<space>,q=2``."""
    if isinstance(text, SpaceSpec):
        return text
    tag, _, body = str(text).strip().partition(":")
    if tag == "lp":
        p = math.inf if body in ("inf", "infinity") else float(body)
        return SpaceSpec("lp", p=p)
    if tag == "convex":
        head, sep, q = body.rpartition(",q=")
        if not sep or not head.startswith("base="):
            raise DomainError(f"cannot parse {text!r}")
        return SpaceSpec("convex", q=float(q), base=parse_space(head[len("base="):]))
    kv = _kv(body)
    if tag == "lorentz":
        return SpaceSpec("lorentz", phi=kv["phi"])
    if tag == "lorentzq":
        return SpaceSpec("lorentzq", phi=kv["phi"], q=float(kv["q"]))
    if tag == "marcinkiewicz":
        return SpaceSpec("marcinkiewicz", phi=kv["phi"],
                         average=kv.get("max", "0") not in ("0", "false"))
    raise DomainError(f"unknown space {text!r}")


# --------------------------------------------------------------------------
# norms


def _finite(x, what):
    if not math.isfinite(x):
        raise DivergenceError(f"{what} is not finite ({x!r})")
    return x


def _drops(fs):
    return fs.values - np.append(fs.values[1:], 0.0)


def _marcinkiewicz_average(fs, phi_name):
    """``sup_t f**(t) phi(t)`` with the supremum located piece by piece."""
    phi = get_phi(phi_name)
    c, a = fs.breaks, fs.values
    c0 = fs.starts
    cumint = np.concatenate(([0.0], np.cumsum(a * fs.lengths)))[:-1]
    alpha = cumint - a * c0  # t f**(t) = alpha + a t on piece k

    def g(t, k):
        return (alpha[k] + a[k] * t) * phi(t) / t

    cand = g(c, np.arange(c.size))
    best = float(np.max(cand))
    expo = _phi_exponent(phi_name)
    if expo is not None and 0 < expo < 1:
        theta = 1.0 - expo
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = theta * alpha / (a * (1.0 - theta))
        inside = (a > 0) & (tc > c0) & (tc < c)
        if np.any(inside):
            best = max(best, float(np.max(g(tc[inside], np.flatnonzero(inside)))))
    elif expo is None:
        k = int(np.argmax(cand))
        for j in (k, k + 1):
            if j < c.size and c[j] > c0[j]:
                r = optimize.minimize_scalar(lambda t: -g(t, j), bounds=(max(c0[j], 1e-300), c[j]),
                                             method="bounded", options={"xatol": 1e-14})
                best = max(best, float(-r.fun))
    return best


def norm(spec, f):
    """Norm of a sampled function in the space described by ``spec``."""
    spec = parse_space(spec)
    if spec.tag == "convex":
        g = f.replace(values=np.abs(f.values) ** spec.q)
        return norm(spec.base, g) ** (1.0 / spec.q)
    fs = decreasing_rearrangement(f)
    if fs.breaks.size == 0:
        return 0.0
    if spec.tag == "lp":
        if math.isinf(spec.p):
            return float(fs.values[0])
        return _finite(float(np.dot(fs.values ** spec.p, fs.lengths)) ** (1.0 / spec.p), "L^p norm")
    phi = get_phi(spec.phi)
    ph = np.asarray(phi(fs.breaks), dtype=float)
    if spec.tag == "lorentz":
        return _finite(float(np.dot(_drops(fs), ph)), "Lorentz norm")
    if spec.tag == "lorentzq":
        dq = fs.values ** spec.q - np.append(fs.values[1:] ** spec.q, 0.0)
        return _finite(float(np.dot(dq, ph)) ** (1.0 / spec.q), "Lorentz-q norm")
    if spec.average:
        return _finite(_marcinkiewicz_average(fs, spec.phi), "Marcinkiewicz norm")
    # f* = a_k on [c_{k-1}, c_k); for non-decreasing phi the sup over the
    # piece is the left limit at c_k
    return _finite(float(np.max(fs.values * ph)), "Marcinkiewicz norm")


def lorentz_p1_norm(f, p):
    """``||f||_{L(p,1)} = int_0^1 t^{1/p} f*(t) dt/t``."""
    fs = decreasing_rearrangement(f)
    if fs.breaks.size == 0:
        return 0.0
    e = 1.0 / p
    return float(np.dot(fs.values, p * (fs.breaks ** e - fs.starts ** e)))


def step_to_function(g, label=""):
    """A step function on (0, 1) as a sampled function on the unit interval."""
    b = np.minimum(g.breaks, 1.0)
    keep = np.concatenate(([True], np.diff(b) > 0)) & (b > 0)
    b, v = b[keep], g.values[keep]
    w = np.diff(np.concatenate(([0.0], b)))
    vals, wts = list(v), list(w)
    if b.size == 0 or b[-1] < 1.0:
        vals.append(g.tail)
        wts.append(1.0 - (b[-1] if b.size else 0.0))
    wts = np.array(wts)
    return SampledFunction(np.array(vals), wts / wts.sum(), np.zeros(len(vals)), label=label)


def fundamental_function(spec):
    spec = parse_space(spec)
    if spec.tag == "lp" and not math.isinf(spec.p):
        p = spec.p
        return FundamentalFunction(lambda t: np.asarray(t, dtype=float) ** (1.0 / p), str(spec))

    def phi(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([norm(spec, indicator(x)) if x > 0 else 0.0 for x in np.minimum(t, 1.0)])
        return out
    return FundamentalFunction(phi, str(spec))


def q_concavity_proxy(spec, q, grid):
    """Midpoint concavity of ``phi(t)**q`` on ``grid``: a stand-in for q-concavity of the space."""
    phi = fundamental_function(spec)
    g = np.sort(np.asarray(grid, dtype=float))
    a, b = g[:-2], g[2:]
    return bool(np.all(phi(0.5 * (a + b)) ** q >= 0.5 * (phi(a) ** q + phi(b) ** q) - 1e-10))


# --------------------------------------------------------------------------
# Hardy operators


def hardy_P(g, t):
    """``(1/t) int_0^t g``."""
    t = np.asarray(t, dtype=float)
    if np.any((t <= 0) | (t > 1)):
        raise DomainError("t must lie in (0, 1]")
    return g.integral(t) / t


def hardy_Q(g, t, a=0.0):
    """``int_t^1 s^a g(s) ds / s`` for a step function ``g``."""
    if not 0 < t < 1:
        raise DomainError("t must lie in (0, 1)")
    if a < 0:
        raise DomainError("a must be >= 0")
    edges = np.concatenate(([0.0], g.breaks, [1.0]))
    vals = np.append(g.values, g.tail)
    lo = np.clip(edges[:-1], t, 1.0)
    hi = np.clip(edges[1:], t, 1.0)
    lo, hi = np.minimum(lo, hi), hi
    if a == 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            piece = np.where(hi > lo, np.log(hi / lo), 0.0)
    else:
        piece = (hi ** a - lo ** a) / a
    return _finite(float(np.dot(vals, piece)), "Hardy Q integral")


# --------------------------------------------------------------------------
# dilations and Boyd indices

_U_GRID = np.logspace(-8, 0, 81)
_THETAS = (0.25, 0.5, 0.75)


def _power_step(u, theta, pieces=48, ratio=0.7):
    """Step approximation of ``t^-theta`` on (0, u) on a geometric partition."""
    right = u * ratio ** np.arange(pieces)
    left = np.append(right[1:], 0.0)
    mid = np.where(left > 0, np.sqrt(left * right), 0.5 * right)
    vals = mid ** -theta
    return right[::-1], vals[::-1]


def _norm_of_step(spec, breaks, vals):
    b = np.minimum(breaks, 1.0)
    keep = np.concatenate(([True], np.diff(b) > 0))
    g = MonotoneStep(b[keep], vals[keep], 0.0)
    return norm(spec, step_to_function(g))


def dilation_norm(spec, s):
    """Lower estimate of ``||E_s||`` on the space, ``E_s f(t) = f*(t/s)``.

    The supremum of ``||E_s f|| / ||f||`` is taken over indicators
    ``chi_(0,u)`` and step approximations of ``t^-theta chi_(0,u)``; ``E_s``
    just rescales the breakpoints of a step function, so each ratio is exact.
    """
    spec = parse_space(spec)
    if s <= 0:
        raise DomainError("dilation parameter must be > 0")
    if s == 1:
        return 1.0
    phi = fundamental_function(spec)
    u = _U_GRID
    best = float(np.max(phi(np.minimum(s * u, 1.0)) / phi(u)))
    for theta in _THETAS:
        for uu in u[::10]:
            br, vals = _power_step(uu, theta)
            base = _norm_of_step(spec, br, vals)
            if base > 0:
                best = max(best, _norm_of_step(spec, s * br, vals) / base)
    return best


def boyd_indices(spec, n_s=16):
    """``(sup_{s<1} ln h(s)/ln s, inf_{s>1} ln h(s)/ln s)`` over a log grid of ``s``."""
    small = np.logspace(-6, -0.05, n_s)
    large = np.logspace(0.05, 6, n_s)
    lower = max(math.log(dilation_norm(spec, s)) / math.log(s) for s in small)
    upper = min(math.log(dilation_norm(spec, s)) / math.log(s) for s in large)
    return lower, upper
