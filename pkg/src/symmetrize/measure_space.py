"""Model metric probability spaces, isoperimetric profiles and sampled test functions.

A test function lives on a model space as a finite list of atoms
``(value, weight, grad)``: the function value at a quadrature node, the
mass of the cell the node represents, and the analytic gradient modulus at
the node.  Gradients are never obtained by numerical differentiation.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special

from .errors import DomainError, NonFiniteError, SamplingError
from .expr import compile_expression

__all__ = [
    "ModelSpace", "ProfileSpec", "SampledFunction", "BorelSetApprox",
    "gaussian_profile", "euclidean_profile", "unit_ball_volume", "get_profile",
    "sample_function", "median", "indicator", "smooth_family",
    "half_line_set", "boundary_interval_set", "ball_set",
]

SPACE_KINDS = ("gaussian1d", "gaussian2d", "euclidean_ball", "unit_interval",
               "discrete_atoms")


@dataclass(frozen=True)
class ModelSpace:
    kind: str
    dimension: int = 1
    weights: tuple = ()
    positions: tuple = ()

    def __post_init__(self):
        if self.kind not in SPACE_KINDS:
            raise DomainError(f"unknown space kind {self.kind!r}")
        if self.kind == "euclidean_ball" and self.dimension < 2:
            raise DomainError("euclidean_ball needs dimension >= 2")
        if self.kind == "discrete_atoms":
            w = np.asarray(self.weights, dtype=float)
            if w.size == 0 or np.any(w <= 0):
                raise DomainError("discrete_atoms needs at least one atom, all weights > 0")
            if abs(w.sum() - 1.0) > 1e-12:
                raise DomainError(f"atom weights sum to {w.sum()!r}, not 1")
            if self.positions and len(self.positions) != w.size:
                raise DomainError("positions and weights differ in length")

    @property
    def variables(self):
        return {
            "gaussian1d": ("x",), "unit_interval": ("x",), "gaussian2d": ("x", "y"),
            "euclidean_ball": ("r",), "discrete_atoms": ("x", "i"),
        }[self.kind]

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, str):
            cfg = {"kind": cfg}
        kind = cfg["kind"]
        if kind == "euclidean_ball":
            return cls(kind, dimension=int(cfg.get("n", cfg.get("dimension", 2))))
        if kind == "gaussian2d":
            return cls(kind, dimension=2)
        if kind == "discrete_atoms":
            return cls(kind, weights=tuple(float(w) for w in cfg["weights"]),
                       positions=tuple(float(p) for p in cfg.get("positions", ())))
        return cls(kind)


# --------------------------------------------------------------------------
# profiles


def _check_open_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0) | ~(t < 1)):
        raise DomainError("profile argument must lie in (0, 1)")
    return t


def gaussian_profile(t, mode="exact"):
    """Isoperimetric profile of the standard Gaussian measure.

    ``exact`` is the normal density at the normal quantile of ``t``.
    ``asymptotic`` is ``t * sqrt(2 log(1/t))``, mirrored about 1/2.
    """
    t = _check_open_unit(t)
    u = np.minimum(t, 1.0 - t)
    if mode == "exact":
        x = special.ndtri(u)
        return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if mode == "asymptotic":
        return u * np.sqrt(2.0 * np.log(1.0 / u))
    raise DomainError(f"unknown gaussian profile mode {mode!r}")


def unit_ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def euclidean_profile(n, t):
    """``tau_n * t**(1/n')`` with ``tau_n = n * beta_n**(1/n)``."""
    if n < 2:
        raise DomainError("euclidean profile needs n >= 2")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("euclidean profile needs t >= 0")
    tau = n * unit_ball_volume(n) ** (1.0 / n)
    return tau * t ** ((n - 1.0) / n)


@dataclass(frozen=True)
class ProfileSpec:
    name: str
    evaluate: object = field(repr=False, compare=False)
    concave: bool = False
    symmetric_about_half: bool = False
    vanishes_at_zero: bool = False

    def __call__(self, t):
        return self.evaluate(np.asarray(t, dtype=float))

    def validate(self, grid):
        """Check the declared structural flags on ``grid`` (interior points)."""
        grid = np.asarray(grid, dtype=float)
        vals = self(grid)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            raise DomainError(f"profile {self.name} is not positive on the grid")
        if self.symmetric_about_half:
            err = np.max(np.abs(vals - self(1.0 - grid)))
            if err > 1e-10:
                raise DomainError(f"profile {self.name} not symmetric: {err:.3g}")
        if self.concave and grid.size >= 3:
            g = np.sort(grid)
            a, b = g[:-2], g[2:]
            mid = 0.5 * (a + b)
            gap = self(mid) - 0.5 * (self(a) + self(b))
            if np.min(gap) < -1e-10:
                raise DomainError(f"profile {self.name} fails midpoint concavity")
        return True


def _power(a):
    return lambda t: t ** a


def _sympower(a):
    return lambda t: np.minimum(t, 1.0 - t) ** a


def get_profile(name):
    """Look up a profile by name.

    Names: ``gaussian``, ``gaussian_asymptotic``, ``unit`` (I = 1, the
    profile of the unit interval), ``linear`` (I = t), ``power:a``,
    ``sympower:a`` (``min(t, 1-t)**a``), ``euclidean:n``; anything else is
    read as an expression in ``t`` with no structural flags.
    """
    if isinstance(name, ProfileSpec):
        return name
    key, _, arg = str(name).partition(":")
    if key == "gaussian":
        return ProfileSpec("gaussian", lambda t: gaussian_profile(t, "exact"),
                           True, True, True)
    if key == "gaussian_asymptotic":
        return ProfileSpec("gaussian_asymptotic",
                           lambda t: gaussian_profile(t, "asymptotic"), True, True, True)
    if key == "unit":
        return ProfileSpec("unit", lambda t: np.ones_like(t), True, True, False)
    if key == "linear":
        return ProfileSpec("linear", lambda t: t.copy(), True, False, True)
    if key == "power":
        a = float(arg)
        return ProfileSpec(f"power:{arg}", _power(a), 0 < a <= 1, False, a > 0)
    if key == "sympower":
        a = float(arg)
        return ProfileSpec(f"sympower:{arg}", _sympower(a), 0 < a <= 1, True, a > 0)
    if key == "euclidean":
        n = int(arg)
        return ProfileSpec(f"euclidean:{n}", lambda t: euclidean_profile(n, t),
                           True, False, True)
    expr = compile_expression(name)
    if expr.variables - {"t"}:
        raise DomainError(f"profile expression may only use t: {name!r}")
    return ProfileSpec(str(name), lambda t: expr(t=t))


# --------------------------------------------------------------------------
# sampled functions


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Atoms ``(value, weight, grad)`` of a function on a model space."""

    values: np.ndarray
    weights: np.ndarray
    grads: np.ndarray
    space: ModelSpace = None
    points: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        g = np.atleast_1d(np.asarray(self.grads, dtype=float))
        if g.shape == (1,) and v.size > 1:
            g = np.full_like(v, g[0])
        if not (v.shape == w.shape == g.shape) or v.ndim != 1:
            raise ValueError("values, weights and grads must be 1-d and aligned")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {w.sum()!r}, not 1")
        if np.any(g < 0):
            raise ValueError("gradient moduli must be non-negative")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(g))):
            raise NonFiniteError("non-finite atom (overflow in a derived quantity)")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "grads", g)

    @property
    def resolution(self):
        return self.values.size

    def replace(self, values=None, grads=None, label=None):
        return SampledFunction(
            self.values if values is None else values, self.weights,
            self.grads if grads is None else grads, self.space, self.points,
            self.label if label is None else label)

    def abs(self):
        return self.replace(values=np.abs(self.values))

    def mean(self):
        # the clip keeps constants exact despite rounding in the weights
        m = np.dot(self.values, self.weights)
        return float(np.clip(m, self.values.min(), self.values.max()))

    def centered(self):
        return self.replace(values=self.values - self.mean())

    def l1(self):
        return float(np.dot(np.abs(self.values), self.weights))

    def gradient_mass(self):
        """``|| |grad f| ||_{L^1}``."""
        return float(np.dot(self.grads, self.weights))

    def gradient_function(self):
        """The gradient modulus as a sampled function (its own gradient is unknown, set to 0)."""
        return SampledFunction(self.grads, self.weights, np.zeros_like(self.grads),
                               self.space, self.points, self.label + "|grad|")


def _as_callable(f, variables):
    if callable(f) and not isinstance(f, str):
        return f
    expr = compile_expression(f)
    extra = expr.variables - set(variables)
    if extra:
        raise SamplingError(f"expression {f!r} uses unknown variables {sorted(extra)}")
    return lambda **env: expr(**env)


def _nodes(space, resolution):
    """Quadrature nodes (as a variable environment), weights and node array."""
    n = int(resolution)
    if space.kind == "unit_interval":
        x = (np.arange(n) + 0.5) / n
        return {"x": x}, np.full(n, 1.0 / n), x
    if space.kind == "gaussian1d":
        x = special.ndtri((np.arange(n) + 0.5) / n)
        return {"x": x}, np.full(n, 1.0 / n), x
    if space.kind == "gaussian2d":
        x1 = special.ndtri((np.arange(n) + 0.5) / n)
        xx, yy = np.meshgrid(x1, x1, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        return {"x": pts[:, 0], "y": pts[:, 1]}, np.full(n * n, 1.0 / (n * n)), pts
    if space.kind == "euclidean_ball":
        edges = np.linspace(0.0, 1.0, n + 1)
        w = np.diff(edges ** space.dimension)
        r = 0.5 * (edges[:-1] + edges[1:])
        return {"r": r}, w, r
    w = np.asarray(space.weights, dtype=float)
    pos = np.asarray(space.positions, dtype=float) if space.positions else np.arange(w.size, dtype=float)
    return {"x": pos, "i": np.arange(w.size, dtype=float)}, w, pos


def sample_function(space, f, grad, resolution=4096, label=""):
    """Sample ``f`` and its analytic gradient modulus ``grad`` on ``space``.

    ``f`` and ``grad`` are expression strings (or callables taking the
    space's variables as keywords).  For ``gaussian2d`` the resolution is
    per axis; for ``discrete_atoms`` it is ignored.
    """
    if space.kind != "discrete_atoms" and int(resolution) < 2:
        raise SamplingError("resolution must be >= 2")
    env, weights, pts = _nodes(space, resolution)
    fv = np.asarray(_as_callable(f, space.variables)(**env), dtype=float)
    gv = np.asarray(_as_callable(grad, space.variables)(**env), dtype=float)
    fv = np.broadcast_to(fv, weights.shape).astype(float)
    gv = np.abs(np.broadcast_to(gv, weights.shape).astype(float))
    # NaN means the expression is undefined there; inf means it overflowed
    for bad, err in ((np.isnan(fv) | np.isnan(gv), SamplingError),
                     (np.isinf(fv) | np.isinf(gv), NonFiniteError)):
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise err(f"non-finite evaluation at node {k} ({pts[k]!r})")
    return SampledFunction(fv, weights, gv, space, pts, label or str(f))


def indicator(measure):
    """Two-atom indicator of a set of the given measure (value 1 on the set)."""
    if not 0 < measure <= 1:
        raise DomainError("indicator measure must lie in (0, 1]")
    if measure == 1:
        return SampledFunction([1.0], [1.0], [0.0], label="chi")
    return SampledFunction([1.0, 0.0], [measure, 1.0 - measure], [0.0, 0.0],
                           label=f"chi({measure:g})")


def median(f):
    """Smallest m with mu{f >= m} >= 1/2 and mu{f <= m} >= 1/2."""
    order = np.argsort(f.values, kind="stable")
    v = f.values[order]
    cum = np.cumsum(f.weights[order])
    j = int(np.searchsorted(cum, 0.5 - 1e-12, side="left"))
    return float(v[min(j, v.size - 1)])


# --------------------------------------------------------------------------
# random smooth test functions


def _fmt(a):
    return repr(float(a))


def smooth_family(space, count, seed):
    """Seeded family of smooth Lipschitz test functions as (f, grad) expressions.

    Each member is a constant plus a linear term plus three Gaussian bumps;
    the gradient expression is the exact derivative modulus.
    """
    rng = np.random.default_rng(seed)
    if space.kind == "unit_interval":
        centre = lambda: rng.uniform(0.0, 1.0)
        width = lambda: rng.uniform(0.05, 0.3)
    elif space.kind in ("gaussian1d", "gaussian2d"):
        centre = lambda: rng.normal(0.0, 1.0)
        width = lambda: rng.uniform(0.3, 1.5)
    else:
        raise DomainError(f"no smooth family for {space.kind}")
    out = []
    for _ in range(int(count)):
        c0 = rng.uniform(-0.5, 0.5)
        b = rng.uniform(-1.0, 1.0)
        f_terms = [_fmt(c0), f"{_fmt(b)}*x"]
        g_terms = [_fmt(b)]
        for _k in range(3):
            a, m, s = rng.normal(), centre(), width()
            bump = f"exp(-(x-({_fmt(m)}))^2/{_fmt(2 * s * s)})"
            f_terms.append(f"({_fmt(a)})*{bump}")
            g_terms.append(f"({_fmt(-a / (s * s))})*(x-({_fmt(m)}))*{bump}")
        out.append((" + ".join(f_terms), "abs(" + " + ".join(g_terms) + ")"))
    return out


# --------------------------------------------------------------------------
# sets and their mollifications


@dataclass(frozen=True, eq=False)
class BorelSetApprox:
    """A set by its measure and perimeter, with ramp mollifications of its indicator."""

    measure: float
    perimeter: float
    indicator_mollifications: tuple
    widths: tuple = ()
    l1_distances: tuple = ()
    label: str = ""

    def __post_init__(self):
        if not 0 < self.measure < 1:
            raise DomainError("set measure must lie in (0, 1)")
        if self.perimeter < 0:
            raise DomainError("perimeter must be >= 0")
        d = np.asarray(self.l1_distances, dtype=float)
        # strictly decreasing until the sampled ramp coincides with the indicator
        if d.size > 1 and np.any((np.diff(d) > 0) | ((np.diff(d) == 0) & (d[1:] > 0))):
            raise DomainError("mollifications must approach the indicator in L1")


def _mollified(space, ramp, slope, chi, widths, resolution):
    fs, dists = [], []
    for h in widths:
        f = sample_function(space, ramp(h), slope(h), resolution, label=f"ramp h={h:g}")
        x = sample_function(space, chi, "0", resolution)
        fs.append(f)
        dists.append(float(np.dot(np.abs(f.values - x.values), f.weights)))
    return tuple(fs), tuple(dists)


def half_line_set(level=0.0, widths=(2.0 ** -3, 2.0 ** -5, 2.0 ** -7), resolution=4096):
    """Gaussian half-line ``{x > level}`` with ramps ``clamp((x - level)/h + 1, 0, 1)``."""
    space = ModelSpace("gaussian1d")
    a = _fmt(level)
    ramp = lambda h: f"min(max((x-({a}))/{_fmt(h)} + 1, 0), 1)"
    slope = lambda h: f"step(x-({a})+{_fmt(h)})*step(({a})-x)/{_fmt(h)}"
    fs, d = _mollified(space, ramp, slope, f"step(x-({a}))", widths, resolution)
    mu = float(special.ndtr(-level))
    per = math.exp(-0.5 * level * level) / math.sqrt(2 * math.pi)
    return BorelSetApprox(mu, per, fs, tuple(widths), d, f"half-line x>{level:g}")


def boundary_interval_set(length=0.3, widths=(2.0 ** -4, 2.0 ** -6, 2.0 ** -8), resolution=4096):
    """Unit-interval set ``[0, length)``; one interior boundary point, perimeter 1."""
    space = ModelSpace("unit_interval")
    a = _fmt(length)
    ramp = lambda h: f"min(max(({a}-x)/{_fmt(h)} + 1, 0), 1)"
    slope = lambda h: f"step(x-({a}))*step(({a})+{_fmt(h)}-x)/{_fmt(h)}"
    fs, d = _mollified(space, ramp, slope, f"step(({a})-x)", widths, resolution)
    return BorelSetApprox(float(length), 1.0, fs, tuple(widths), d, f"[0,{length:g})")


def ball_set(radius=0.5, n=2, widths=(2.0 ** -3, 2.0 ** -5, 2.0 ** -7), resolution=4096):
    """Centred ball of the given radius inside the unit ball of R^n (probability-normalised).

    The ramps ``clamp((radius - r)/h, 0, 1)`` sit inside the ball.
    """
    space = ModelSpace("euclidean_ball", dimension=n)
    R = _fmt(radius)
    ramp = lambda h: f"min(max(({R}-r)/{_fmt(h)}, 0), 1)"
    slope = lambda h: f"step(r-({R})+{_fmt(h)})*step(({R})-r)/{_fmt(h)}"
    fs, d = _mollified(space, ramp, slope, f"step(({R})-r)", widths, resolution)
    mu = radius ** n
    per = n * radius ** (n - 1)  # surface / volume of the unit ball
    return BorelSetApprox(mu, per, fs, tuple(widths), d, f"ball r<{radius:g}")
