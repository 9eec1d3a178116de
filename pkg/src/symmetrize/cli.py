"""Scenario runner: JSON configs in, JSON reports and CSV curves out.

Verbs::

    symmetrize verify CONFIG      run inequality checks over a function family
    symmetrize profile CONFIG     dump t, I, w_1, w_2, cap_1(t, 1/2) as CSV
    symmetrize kfunc CONFIG       dump K-functional curves as CSV
    symmetrize martingale CONFIG  Herz and stopped-square checks on random martingales

Exit codes: 0 all checks passed, 1 some check failed, 2 bad config,
3 numeric overflow or divergence.

Config keys (defaults in ``DEFAULTS``)::

    space        {"kind": "gaussian1d"} or {"kind": "euclidean_ball", "n": 2} ...
    profile      profile name or expression in t
    resolution   atoms per axis (4096)
    tol          relative tolerance (0.01)
    seed         seed for generated families and martingales (0)
    grid         list of t values, or {"lo", "hi", "points"} (log-spaced)
    functions    [{"f": expr, "grad": expr, "label": ...}, ...] or
                 {"family": "smooth", "count": 50, "seed": 7}
    inequalities [{"id": "oscillation", "q": 2}, ...]
    sets         [{"kind": "half_line", "level": 0.5}, ...] for id "isoperimetry"
    martingale   {"depth": 10, "count": 100, "stopping": true}
    output       output directory ("out")
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import copy
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import capacity, inequalities as ineq, interpolation, martingale as mg
from .expr import ExpressionError
from .errors import (AdaptednessError, AlignmentError, ConvergenceError, DivergenceError,
                     DomainError, PreconditionError, SamplingError)
from .measure_space import (ModelSpace, ball_set, boundary_interval_set, get_profile,
                            half_line_set, sample_function, smooth_family)
from .ri_spaces import boyd_indices, parse_space

log = logging.getLogger("symmetrize")

DEFAULTS = {
    "space": {"kind": "gaussian1d"},
    "profile": "gaussian",
    "resolution": 4096,
    "tol": 1e-2,
    "seed": 0,
    "grid": {"lo": 1e-4, "hi": 0.5, "points": 64},
    "functions": [],
    "inequalities": [],
    "sets": [],
    "martingale": {"depth": 10, "count": 100, "stopping": True},
    "output": "out",
    "workers": 4,
}

# id -> accepted parameter names
INEQUALITIES = {
    "oscillation": {"q"},
    "oscillation_concave": set(),
    "rearranged_gradient": {"q"},
    "capacitary_oscillation": {"q", "refine"},
    "poincare": {"X", "Y", "q", "refine"},
    "gn_sharp": set(),
    "gaussian_isoperimetric": {"mode"},
    "gn_interpolation_weak": set(),
    "gn_interpolation_strong": set(),
    "reiteration": {"t", "theta"},
    "isoperimetry": set(),
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_OVERFLOW = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Overflow(Exception):
    pass


# --------------------------------------------------------------------------
# config


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1:1: top level must be a JSON object")
    cfg = copy.deepcopy(DEFAULTS)
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    cfg.update(raw)
    return cfg


def apply_overrides(cfg, args):
    for key in ("resolution", "tol", "seed", "out"):
        v = getattr(args, key, None)
        if v is not None:
            cfg["output" if key == "out" else key] = v
    if isinstance(cfg["functions"], dict) and getattr(args, "seed", None) is not None:
        cfg["functions"]["seed"] = args.seed
    return cfg


def make_grid(spec):
    if isinstance(spec, dict):
        try:
            g = np.geomspace(float(spec["lo"]), float(spec["hi"]), int(spec["points"]))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad grid {spec!r}: {e}") from None
    else:
        g = np.asarray(spec, dtype=float)
    return g


def build_space(cfg):
    try:
        return ModelSpace.from_config(cfg["space"])
    except (KeyError, DomainError, TypeError) as e:
        raise ConfigError(f"bad space {cfg['space']!r}: {e}") from None


def function_sources(cfg, space):
    """``(f, grad, label)`` expression triples from the ``functions`` entry."""
    spec = cfg["functions"]
    if isinstance(spec, dict):
        if spec.get("family", "smooth") != "smooth":
            raise ConfigError(f"unknown family {spec.get('family')!r}")
        seed = int(spec.get("seed", cfg["seed"]))
        try:
            pairs = smooth_family(space, int(spec.get("count", 50)), seed)
        except DomainError as e:
            raise ConfigError(str(e)) from None
        return [(f, g, f"smooth[{seed}:{k}]") for k, (f, g) in enumerate(pairs)]
    if not isinstance(spec, list):
        raise ConfigError("functions must be a list or a family spec")
    items = []
    for k, it in enumerate(spec):
        if isinstance(it, dict):
            if "f" not in it:
                raise ConfigError(f"function {k} needs an 'f' expression")
            items.append((it["f"], it.get("grad", "0"), it.get("label", it["f"])))
        elif isinstance(it, (list, tuple)) and len(it) == 2:
            items.append((it[0], it[1], it[0]))
        else:
            raise ConfigError(f"function {k}: expected {{'f', 'grad'}} or [f, grad]")
    return items


def sample_sources(space, sources, resolution):
    try:
        return [sample_function(space, f, g, resolution, label=lab) for f, g, lab in sources]
    except (SyntaxError, ExpressionError) as e:
        raise ConfigError(f"cannot parse expression: {e}") from None
    except SamplingError as e:
        raise ConfigError(str(e)) from None


def validate_inequalities(cfg):
    entries = cfg["inequalities"]
    if not isinstance(entries, list):
        raise ConfigError("inequalities must be a list")
    for k, e in enumerate(entries):
        if isinstance(e, str):
            e = {"id": e}
            entries[k] = e
        iid = e.get("id")
        if iid not in INEQUALITIES:
            raise ConfigError(f"inequality {k}: unknown id {iid!r}; known: {sorted(INEQUALITIES)}")
        extra = set(e) - {"id", "tol", "grid"} - INEQUALITIES[iid]
        if extra:
            raise ConfigError(f"inequality {k} ({iid}): unknown parameters {sorted(extra)}")
    try:
        get_profile(cfg["profile"])
    except (DomainError, SyntaxError, ExpressionError, ValueError) as e:
        raise ConfigError(f"bad profile {cfg['profile']!r}: {e}") from None
    return entries


# --------------------------------------------------------------------------
# verification


def _tag(entry):
    parts = [entry["id"]]
    for k in sorted(set(entry) - {"id", "tol", "grid", "refine"}):
        parts.append(f"{k}{entry[k]}")
    return "_".join(str(p).replace(":", "-").replace("/", "-").replace(",", "-").replace("=", "")
                    for p in parts)


def _run_one(entry, f, src, cfg, space, grid, shared):
    iid = entry["id"]
    tol = float(entry.get("tol", cfg["tol"]))
    g = make_grid(entry["grid"]) if "grid" in entry else grid
    I = cfg["profile"]
    q = entry.get("q", 1)
    refine = entry.get("refine", True)
    finer = None
    if refine and iid in ("capacitary_oscillation", "poincare"):
        finer = sample_function(space, src[0], src[1], 2 * int(cfg["resolution"]), label=src[2])
    if iid == "oscillation":
        return ineq.verify_oscillation(f, I, q, tol, g)
    if iid == "oscillation_concave":
        return ineq.verify_oscillation_concave(f, I, tol, g)
    if iid == "rearranged_gradient":
        return ineq.verify_rearranged_gradient(f, I, q, tol=tol, grid=g)
    if iid == "capacitary_oscillation":
        return ineq.verify_capacitary_oscillation(f, I, q, tol=tol, grid=g, refined=finer,
                                                  muckenhoupt=shared[("muck", I, q)])
    if iid == "poincare":
        X, Y = entry.get("X", "lp:2"), entry.get("Y", "lorentzq:phi=tlog,q=2")
        return ineq.verify_poincare(f, X, Y, I, q, tol, refined=finer,
                                    boyd=shared[("boyd", str(parse_space(X)))],
                                    propiedad=False)
    if iid == "gn_sharp":
        return ineq.verify_gn_sharp(f, tol)
    if iid == "gaussian_isoperimetric":
        return ineq.verify_gaussian_isoperimetric(f, tol, entry.get("mode", "exact"))
    if iid in ("gn_interpolation_weak", "gn_interpolation_strong"):
        return interpolation.derive_oscillation_from_gn(f, iid.endswith("strong"), tol,
                                                        None if "grid" not in entry else g)
    if iid == "reiteration":
        return interpolation.reiteration_check(f, float(entry.get("t", 0.25)),
                                               theta=float(entry.get("theta", 0.5)), tol=tol)
    raise ConfigError(f"{iid} does not take functions")


def _failure(iid, msg, resolution):
    return {"inequality_id": iid, "params": {}, "grid": [], "lhs": [], "rhs": [],
            "min_relative_margin": None, "passed": False, "resolution": resolution,
            "notes": f"error: {msg}"}


def _task(job):
    entry, f, src, cfg, space, grid, shared = job
    try:
        rep = _run_one(entry, f, src, cfg, space, grid, shared)
        return rep.to_dict(), rep.curve_rows()
    except (DivergenceError, OverflowError, FloatingPointError) as e:
        raise _Overflow(f"{entry['id']} on {f.label}: {e}") from e
    except (PreconditionError, DomainError, ConvergenceError) as e:
        return _failure(entry["id"], e, f.resolution), []


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        capacity.write_curve_csv(fh, header, rows)


def _summarise(results):
    by = {}
    for r in results:
        d = by.setdefault(r["inequality_id"], {"total": 0, "passed": 0, "worst_margin": None})
        d["total"] += 1
        d["passed"] += int(r["passed"])
        m = r["min_relative_margin"]
        if m is not None and (d["worst_margin"] is None or m < d["worst_margin"]):
            d["worst_margin"] = m
    return by


def _sets(cfg):
    res = int(cfg["resolution"])
    out = []
    for k, s in enumerate(cfg["sets"]):
        kind = s.get("kind")
        if kind == "half_line":
            out.append(half_line_set(float(s.get("level", 0.0)), resolution=res))
        elif kind == "boundary_interval":
            out.append(boundary_interval_set(float(s.get("length", 0.3)), resolution=res))
        elif kind == "ball":
            out.append(ball_set(float(s.get("radius", 0.5)), int(s.get("n", 2)), resolution=res))
        else:
            raise ConfigError(f"set {k}: unknown kind {kind!r}")
    return out


def run_verify(cfg):
    space = build_space(cfg)
    entries = validate_inequalities(cfg)
    grid = make_grid(cfg["grid"])
    res = int(cfg["resolution"])
    sources = function_sources(cfg, space)
    funcs = sample_sources(space, sources, res)
    shared = {}
    for e in entries:
        if e["id"] == "capacitary_oscillation":
            key = ("muck", cfg["profile"], e.get("q", 1))
            if key not in shared:
                shared[key] = capacity.muckenhoupt_check(cfg["profile"], e.get("q", 1))
        if e["id"] == "poincare":
            X = str(parse_space(e.get("X", "lp:2")))
            shared.setdefault(("boyd", X), boyd_indices(X))
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    jobs, names = [], []
    for e in entries:
        if e["id"] == "isoperimetry":
            continue
        for k, (f, src) in enumerate(zip(funcs, sources)):
            jobs.append((e, f, src, cfg, space, grid, shared))
            names.append(f"{_tag(e)}_f{k:03d}")
    with ThreadPoolExecutor(max_workers=int(cfg.get("workers", 4))) as ex:
        outcomes = list(ex.map(_task, jobs))
    results = []
    for name, (d, rows), job in zip(names, outcomes, jobs):
        d = dict(d, function=job[1].label)
        _write_json(os.path.join(out, name + ".json"), d)
        if rows:
            _write_rows(os.path.join(out, name + ".csv"), ["t", "lhs", "rhs", "relative_margin"], rows)
        results.append(d)
    if any(e["id"] == "isoperimetry" for e in entries):
        for k, A in enumerate(_sets(cfg)):
            try:
                rep = ineq.recover_isoperimetry(A, cfg["profile"])
                d, rows = rep.to_dict(), rep.curve_rows()
            except ConvergenceError as err:
                d, rows = _failure("isoperimetry", err, res), []
            d["function"] = A.label
            name = f"isoperimetry_s{k:03d}"
            _write_json(os.path.join(out, name + ".json"), d)
            if rows:
                _write_rows(os.path.join(out, name + ".csv"), ["t", "lhs", "rhs", "relative_margin"], rows)
            results.append(d)
    summary = {
        "total": len(results),
        "passed": sum(int(r["passed"]) for r in results),
        "by_inequality": _summarise(results),
        "entries": [{"inequality_id": r["inequality_id"], "function": r["function"],
                     "min_relative_margin": r["min_relative_margin"], "passed": r["passed"]}
                    for r in results],
        "resolution": res,
        "tol": float(cfg["tol"]),
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    return EXIT_OK if summary["passed"] == summary["total"] else EXIT_FAIL


def _cell(fn):
    try:
        with np.errstate(all="raise"):
            v = float(fn())
        if not math.isfinite(v):
            raise FloatingPointError
        return v
    except (DivergenceError, FloatingPointError, OverflowError, DomainError, ZeroDivisionError):
        return None


def profile_rows(profile, grid):
    """Rows ``(t, I, w_1, w_2, cap_1(t, 1/2))``.

    Cells that overflow are None; ``cap_1(t, 1/2)`` is NaN for ``t > 1/2``,
    where it is not defined.
    """
    prof = get_profile(profile)
    rows = []
    w1 = w2 = None
    for t in grid:
        t = float(t)
        if w1 is None:
            w1 = capacity.weight_curve(profile, 1)
            w2 = capacity.weight_curve(profile, 2)
        rows.append((t,
                     _cell(lambda: prof(np.array([t]))[0]),
                     _cell(lambda: w1(t)),
                     _cell(lambda: w2(t)),
                     _cell(lambda: capacity.cap1(profile, t, 0.5)) if t <= 0.5 else math.nan))
    return rows


SENTINEL = "inf"


def run_profile(cfg):
    try:
        get_profile(cfg["profile"])
    except (DomainError, SyntaxError, ExpressionError, ValueError) as e:
        raise ConfigError(f"bad profile {cfg['profile']!r}: {e}") from None
    grid = make_grid(cfg["grid"])
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    rows = profile_rows(cfg["profile"], grid)
    bad = [r[0] for r in rows if any(v is None for v in r[1:])]
    if bad:
        log.warning("%d profile rows hit overflow near the endpoints; marked %s (t = %s)",
                    len(bad), SENTINEL, ", ".join(f"{t:g}" for t in bad[:5]))
    with open(os.path.join(out, "profile.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "I", "w1", "w2", "cap1_half"])
        for r in rows:
            w.writerow([SENTINEL if v is None else "nan" if math.isnan(v) else repr(float(v))
                        for v in r])
    return EXIT_OK


def run_kfunc(cfg):
    space = build_space(cfg)
    funcs = sample_sources(space, function_sources(cfg, space), int(cfg["resolution"]))
    grid = make_grid(cfg["grid"])
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    ok = True
    entries = []
    for k, f in enumerate(funcs):
        curve = interpolation.k_curve(f, grid)
        good = curve.check() and bool(np.max(np.abs(curve.residual)) <= 1e-10)
        ok &= good
        with open(os.path.join(out, f"kfunc_f{k:03d}.csv"), "w", newline="") as fh:
            curve.to_csv(fh)
        entries.append({"function": f.label, "concave_monotone": good,
                        "max_identity_residual": float(np.max(np.abs(curve.residual)))})
    _write_json(os.path.join(out, "summary.json"),
                {"total": len(entries), "passed": sum(int(e["concave_monotone"]) for e in entries),
                 "entries": entries})
    return EXIT_OK if ok else EXIT_FAIL


def run_martingale(cfg):
    spec = dict(DEFAULTS["martingale"], **cfg["martingale"])
    depth, count, seed = int(spec["depth"]), int(spec["count"]), int(cfg["seed"])
    if depth < 1 or count < 1:
        raise ConfigError("martingale depth and count must be >= 1")
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)

    def one(k):
        m = mg.random_martingale(depth, seed + k)
        reps = [mg.verify_herz(m).to_dict()]
        if spec.get("stopping", True):
            rng = np.random.default_rng(np.uint64(seed + k))
            nu = mg.random_stopping_time(depth, rng)
            tau = mg.random_stopping_time(depth, rng)
            reps.append(mg.stopped_square_check(m, nu, tau).to_dict())
        return reps

    with ThreadPoolExecutor(max_workers=int(cfg.get("workers", 4))) as ex:
        outcomes = list(ex.map(one, range(count)))
    results = []
    for k, reps in enumerate(outcomes):
        for d in reps:
            d["function"] = f"martingale[{seed + k}]"
            results.append(d)
    herz = [r for r in results if r["inequality_id"] == "herz"]
    summary = {
        "total": len(results),
        "passed": sum(int(r["passed"]) for r in results),
        "by_inequality": _summarise(results),
        "herz_sup_ratio": max(r["params"]["sup_ratio"] for r in herz),
        "herz_threshold": mg.HERZ_THRESHOLD,
        "depth": depth,
        "seed": seed,
    }
    _write_json(os.path.join(out, "herz_reports.json"), herz)
    _write_json(os.path.join(out, "summary.json"), summary)
    return EXIT_OK if summary["passed"] == summary["total"] else EXIT_FAIL


VERBS = {"verify": run_verify, "profile": run_profile, "kfunc": run_kfunc,
         "martingale": run_martingale}


def build_parser():
    ap = argparse.ArgumentParser(prog="symmetrize", description="Symmetrization inequality checks.")
    ap.add_argument("verb", choices=sorted(VERBS))
    ap.add_argument("config")
    ap.add_argument("--resolution", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    return ap


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        code = VERBS[args.verb](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (_Overflow, DivergenceError, OverflowError, FloatingPointError) as e:
        print(f"numeric overflow: {e}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (AlignmentError, AdaptednessError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
