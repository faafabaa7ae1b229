"""Experiment configurations: schema, defaults, and dispatch to the modules.

A configuration is one JSON object naming an ``experiment`` and a ``map``.
Map parameters may be given under ``map.params`` or as top-level keys.
``run_experiment`` returns the verdict payload together with any CSV tables;
timing is left to the caller so that payloads are reproducible.
"""
from dataclasses import dataclass, field
import math

import jsonschema
import numpy as np
from scipy import stats

from . import classify as C
from . import harmonic as H
from . import hyperbolic as hy
from . import inner
from . import maps
from .errors import ConfigError, InsufficientData, InvalidParam, UnknownMap
from .parallel import sample_rng

EXPERIMENTS = ("orbit", "steps", "classify", "inner-check", "mu-invariance", "sample", "dichotomy",
               "verify-propd", "series-test")
MAP_PARAM_KEYS = ("zeros", "rotation", "delta", "terms", "a", "lam", "half_plane")

_COMPLEX = {"anyOf": [{"type": "number"}, {"type": "string"},
                      {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}
_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_REGION = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["disc", "halfplane", "strip", "oracle"]},
        "direction": _COMPLEX, "offset": {"type": "number"}, "bound_only": {"type": "boolean"},
        "re_min": {"type": "number"}, "half_width": _POS_NUM, "center": {"type": "number"},
        "entry": {"type": "object"}, "exclusions": {"type": "array", "items": {"type": "object"}},
        "budget": _POS_INT, "big_radius": _POS_NUM,
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "map": {"anyOf": [
            {"type": "string"},
            {"type": "object", "required": ["name"],
             "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
             "additionalProperties": False}]},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "zeros": {"type": "array", "items": _COMPLEX, "minItems": 1},
        "rotation": _COMPLEX, "delta": {"type": "number"}, "terms": _POS_INT,
        "a": {"type": "number"}, "lam": _COMPLEX, "half_plane": {"enum": ["+", "-"]},
        "z0": _COMPLEX, "w0": _COMPLEX, "basepoint": _COMPLEX,
        "N": _POS_INT, "budget": _POS_INT, "n_steps": _POS_INT, "iter_budget": _POS_INT,
        "escape_radius": {"anyOf": [_POS_NUM, {"type": "null"}]},
        "pole_eps": {"anyOf": [_POS_NUM, {"type": "null"}]},
        "rel_error_threshold": {"anyOf": [_POS_NUM, {"type": "null"}]},
        "window": _POS_INT,
        "metric": _REGION, "domain": _REGION,
        "n_samples": _POS_INT, "eps_boundary": _POS_NUM, "method": {"enum": ["exact", "walk"]},
        "target": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 4},
        "min_returns": _POS_INT, "strict_precision": {"type": "boolean"},
        "n_arcs": _POS_INT, "margin": _POS_NUM, "quad_tol": _POS_NUM,
        "arcs": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                            "minItems": 2, "maxItems": 2}},
        "n_boundary": _POS_INT, "boundary_steps": _POS_INT, "boundary_tol": _POS_NUM,
        "coverage": {"type": "object", "properties": {
            "n_cells": _POS_INT, "n_steps": _POS_INT, "n_orbits": _POS_INT},
            "additionalProperties": False},
        "recurrence": {"type": "object", "properties": {
            "target": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "n_samples": _POS_INT, "budget": _POS_INT, "min_returns": _POS_INT},
            "additionalProperties": False},
        "c0": _POS_NUM, "c1": {"type": "number"}, "r": {"type": "number"},
        "z_samples": _POS_INT, "n_max": _POS_INT,
        "sequence": {"type": "object", "required": ["kind"], "properties": {
            "kind": {"enum": ["power", "n-log-n", "orbit-gap", "values"]},
            "terms": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                 "minItems": 2, "maxItems": 2}},
            "values": {"type": "array", "items": _POS_NUM}},
            "additionalProperties": False},
        "n_start": {"type": "integer", "minimum": 0}, "length": _POS_INT,
        "tests": {"type": "array", "items": {"enum": ["gauss", "aaronson", "decay"]}},
        "B_cap": _POS_NUM,
        "output": {"type": "object", "properties": {"dir": {"type": "string"},
                                                    "csv": {"type": "boolean"}},
                   "additionalProperties": False},
    },
    "additionalProperties": False,
}


@dataclass
class ExperimentResult:
    config: dict
    result: dict
    tables: dict = field(default_factory=dict)  # name -> (header comment, columns, rows)


def validate(cfg):
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    if cfg["experiment"] != "series-test" and "map" not in cfg:
        raise ConfigError("<root>: 'map' is required for this experiment")


def resolve_map(cfg):
    if "map" not in cfg:
        return None
    m = cfg["map"]
    name, params = (m, {}) if isinstance(m, str) else (m["name"], dict(m.get("params", {})))
    for key in MAP_PARAM_KEYS:
        if key in cfg:
            params[key] = cfg[key]
    try:
        return maps.registry_get(name, params)
    except (UnknownMap, InvalidParam) as exc:
        raise ConfigError(str(exc)) from None


def _cx(v, name):
    try:
        return maps.parse_complex(v, name)
    except InvalidParam as exc:
        raise ConfigError(str(exc)) from None


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _region(spec_dict, name):
    kind = spec_dict["kind"]
    if kind == "disc":
        return H.UnitDisc()
    if kind == "halfplane":
        direction = _cx(spec_dict.get("direction", 1.0), f"{name}.direction")
        if abs(abs(direction) - 1) > 1e-12:
            raise ConfigError(f"{name}.direction must have unit modulus")
        return hy.HalfPlane(direction, float(spec_dict.get("offset", 0.0)),
                            bool(spec_dict.get("bound_only", False)))
    if kind == "strip":
        if "re_min" not in spec_dict or "half_width" not in spec_dict:
            raise ConfigError(f"{name}: strip needs re_min and half_width")
        return H.Strip(float(spec_dict["re_min"]), float(spec_dict["half_width"]),
                       float(spec_dict.get("center", 0.0)))
    raise ConfigError(f"{name}: region kind {kind!r} not allowed here")


def _metric(cfg, spec):
    if "metric" in cfg:
        m = _region(cfg["metric"], "metric")
        if isinstance(m, H.UnitDisc):
            return hy.Disc()
        if isinstance(m, H.Strip):
            raise ConfigError("metric: strips carry no exact metric model")
        return m
    if spec.is_inner:
        return hy.Disc()
    if spec.halfplane is None:
        raise ConfigError(f"map {spec.name} has no default half-plane; give 'metric'")
    return hy.metric_from_hint(spec.halfplane)


def _default_z0(spec, metric):
    if isinstance(metric, hy.Disc):
        return 0j
    return metric.direction * (metric.offset + 8.0)


def _default_domain(spec):
    if spec.is_inner:
        return H.UnitDisc()
    hint = spec.halfplane
    if spec.kind is maps.MapKind.BAKER_DOMINGUEZ:
        return H.OracleDomain(spec, H.Strip(1.0, 0.5 * math.pi))
    if hint is None:
        raise ConfigError(f"map {spec.name} has no default domain; give 'domain'")
    plane = hy.HalfPlane(hint.direction, hint.offset)
    if hint.exact:
        return plane
    return H.OracleDomain(spec, plane)


def _domain(cfg, spec):
    if "domain" not in cfg:
        return _default_domain(spec)
    d = cfg["domain"]
    if d["kind"] != "oracle":
        r = _region(d, "domain")
        if isinstance(r, H.Strip):
            raise ConfigError("domain: a strip is only allowed as an oracle entry region")
        return r
    if spec is None or "entry" not in d:
        raise ConfigError("domain: oracle needs a map and an entry region")
    entry = _region(d["entry"], "domain.entry")
    excl = tuple(_region(e, "domain.exclusions") for e in d.get("exclusions", []))
    return H.OracleDomain(spec, entry, int(d.get("budget", 200)), float(d.get("big_radius", 1e8)), excl)


def _default_basepoint(domain):
    if isinstance(domain, H.UnitDisc):
        return 0j
    region = domain.entry if isinstance(domain, H.OracleDomain) else domain
    if isinstance(region, hy.HalfPlane):
        return region.direction * (region.offset + 1.0)
    return complex(region.re_min + 2.0, region.center)


def _target(values):
    if values is None:
        return None
    if len(values) == 2:
        return H.Box.interval(*values)
    if len(values) == 4:
        return H.Box(*values)
    raise ConfigError("target must have 2 (interval) or 4 (box) entries")


def _inf(x):
    return math.inf if x is None else float(x)


# -- runners ----------------------------------------------------------------

def _run_orbit(cfg, spec, threads):
    z0 = _cx(cfg.get("z0", 0), "z0")
    rec = maps.iterate(spec, z0, cfg.get("budget", 100), _inf(cfg.get("escape_radius")),
                       cfg.get("pole_eps"), cfg.get("window", 3), cfg.get("rel_error_threshold", 1e-6))
    rows = [(k, repr(p.real), repr(p.imag)) for k, p in enumerate(rec.points)]
    result = rec.to_json()
    result["z0"] = _pair(z0)
    tables = {"orbit": ("k: iterate index; re, im: coordinates of f^k(z0)", ["k", "re", "im"], rows)}
    return result, tables


def _steps_table(steps):
    return ("n: iterate index; d_n: hyperbolic distance between iterates n+1 and n; n*d_n: scaled step",
            ["n", "d_n", "n*d_n"], [(n, repr(d), repr(nd)) for n, d, nd in steps.rows()])


def _run_steps(cfg, spec, threads):
    metric = _metric(cfg, spec)
    z0 = _cx(cfg["z0"], "z0") if "z0" in cfg else _default_z0(spec, metric)
    steps = hy.step_sequence(spec, z0, metric, cfg.get("N", 1000))
    result = {"z0": _pair(z0), "steps": steps.to_json()}
    n = steps.n.astype(float)
    nd = n * steps.d
    result["n_d_n_tail"] = {"min": float(nd[len(nd) // 2:].min()), "max": float(nd[len(nd) // 2:].max())}
    try:
        result["decay_fit"] = C.fit_step_decay(steps).to_json()
    except InsufficientData as exc:
        result["decay_fit"] = {"skipped": str(exc)}
    return result, {"steps": _steps_table(steps)}


def _run_classify(cfg, spec, threads):
    metric = _metric(cfg, spec)
    z0 = _cx(cfg["z0"], "z0") if "z0" in cfg else _default_z0(spec, metric)
    n = cfg.get("N", 10000)
    result = {"z0": _pair(z0)}
    if spec.is_inner and isinstance(metric, hy.Disc):
        dw = inner.find_denjoy_wolff(spec, z0, n)
        steps = hy.step_sequence(spec, z0, metric, n)
        cls = C.classify_inner(dw, steps)
        result["denjoy_wolff"] = dw.to_json()
        result["classification"] = cls.to_json()
        result["plane_route"] = C.classify_plane(spec, z0, metric, n).to_json()
        result["series"] = C.aaronson_verdict(steps.gaps).to_json()
    else:
        cls = C.classify_plane(spec, z0, metric, n)
        result["classification"] = cls.to_json()
        orbit = maps.iterate(spec, z0, n, rel_error_threshold=None)
        result["growth"] = C.rippon_stallard_check(orbit).to_json()
        steps = hy.step_sequence(spec, z0, metric, n)
    result["verdict"] = result["classification"]["verdict"]
    return result, {"steps": _steps_table(steps)}


def boundary_convergence(spec, p, n_starts, n_steps, tol, seed, exclude=1e-6):
    """Share of uniform boundary starts within ``tol`` of ``p`` after ``n_steps`` iterations.

    Starts within ``exclude`` of another boundary fixed point are redrawn.
    """
    b = spec.blaschke
    others = []
    for r in np.roots(b.fixed_point_polynomial()):
        if abs(abs(r) - 1) < 1e-6 and abs(r - p) > 1e-6:
            others.append(math.atan2(r.imag, r.real))
    hits = 0
    for i in range(n_starts):
        rng = sample_rng(seed, i)
        while True:
            t = rng.uniform(0.0, 2 * math.pi)
            if all(abs(math.remainder(t - o, 2 * math.pi)) > exclude for o in others):
                break
        orbit = inner.boundary_orbit(spec, t, n_steps, truncate=False)
        end = orbit.angles[-1]
        if abs(complex(math.cos(end), math.sin(end)) - p) < tol:
            hits += 1
    return hits / n_starts if n_starts else 0.0


def _run_inner_check(cfg, spec, threads):
    if not spec.is_inner:
        raise ConfigError(f"map {spec.name} is not an inner function")
    w0 = _cx(cfg.get("w0", 0), "w0")
    n = cfg.get("n_steps", 10000)
    seed = cfg.get("seed", 0)
    dw = inner.find_denjoy_wolff(spec, w0, n)
    steps = hy.step_sequence(spec, w0, hy.Disc(), n)
    gaps = steps.gaps
    result = {"denjoy_wolff": dw.to_json(),
              "gap_tail_sum_from_50": float(np.sum(gaps[50:])) if len(gaps) > 50 else None,
              "series": C.aaronson_verdict(gaps).to_json()}
    result["boundary_convergence"] = {
        "fraction": boundary_convergence(spec, dw.p, cfg.get("n_boundary", 100), cfg.get("boundary_steps", 200),
                                         cfg.get("boundary_tol", 1e-6), seed),
        "n_starts": cfg.get("n_boundary", 100), "steps": cfg.get("boundary_steps", 200),
        "tol": cfg.get("boundary_tol", 1e-6)}
    cov = cfg.get("coverage", {})
    result["coverage"] = inner.circle_coverage(spec, cov.get("n_cells", 64), cov.get("n_steps", 10000),
                                               cov.get("n_orbits", 16), seed)
    if "recurrence" in cfg:
        rc = cfg["recurrence"]
        tgt = rc.get("target", [0.4, 0.2])
        rs = inner.recurrence_stats(spec, inner.CircleArc(tgt[0], tgt[1]), rc.get("n_samples", 200),
                                    rc.get("budget", 100000), rc.get("min_returns", 10), seed, threads)
        result["recurrence"] = rs.to_json()
        result["recurrence"]["target"] = {"start": tgt[0], "length": tgt[1]}
    return result, {}


def random_arcs(p, n_arcs, margin, seed):
    """Seeded arcs whose closures stay ``margin`` away from ``p``."""
    base = math.atan2(p.imag, p.real)
    arcs = []
    for i in range(n_arcs):
        rng = sample_rng(seed, i)
        a, b = np.sort(rng.uniform(margin, 2 * math.pi - margin, size=2))
        if b - a < 1e-9:
            b = a + 1e-9
        arcs.append(inner.CircleArc(base + a, b - a))
    return arcs


def _run_mu_invariance(cfg, spec, threads):
    if not spec.is_inner:
        raise ConfigError(f"map {spec.name} is not an inner function")
    dw = inner.find_denjoy_wolff(spec)
    if "arcs" in cfg:
        arcs = [inner.CircleArc(s, length) for s, length in cfg["arcs"]]
    else:
        arcs = random_arcs(dw.p, cfg.get("n_arcs", 20), cfg.get("margin", 0.1), cfg.get("seed", 0))
    tol = cfg.get("quad_tol", 1e-9)
    checks = [inner.check_mu_invariance(spec, arc, dw, tol) for arc in arcs]
    rows = [(i, repr(a.start), repr(a.length), repr(c.lhs), repr(c.rhs), repr(c.rel_err), repr(c.rel_err_quad))
            for i, (a, c) in enumerate(zip(arcs, checks))]
    result = {"q": dw.q, "p": _pair(dw.p), "n_arcs": len(arcs),
              "max_rel_err": max(c.rel_err for c in checks),
              "max_rel_err_quadrature": max(c.rel_err_quad for c in checks),
              "checks": [dict(arc=a.to_json(), **c.to_json()) for a, c in zip(arcs, checks)]}
    table = ("arc start/length in radians; lhs: mu_p of preimage; rhs: q*mu_p(arc); rel_err closed form"
             " and quadrature", ["arc_id", "start", "length", "lhs", "rhs", "rel_err", "rel_err_quad"], rows)
    return result, {"arcs": table}


def sample_summary(domain, basepoint, pts):
    """Goodness-of-fit numbers for samples against the exact harmonic measure."""
    pts = np.asarray(pts)
    if isinstance(domain, H.UnitDisc):
        # pull back to basepoint 0, where the law is uniform
        u = (pts - basepoint) / (1.0 - np.conj(basepoint) * pts)
        ang = np.mod(np.angle(u), 2 * math.pi)
        eighths = np.bincount(np.minimum((ang / (math.pi / 4)).astype(int), 7), minlength=8) / len(pts)
        right = float(np.mean(np.abs(np.angle(pts)) < math.pi / 2))
        b = complex(basepoint)
        # harmonic measure of the right semicircle seen from a real basepoint b: (2/pi) arctan((1+b)/(1-b))
        exact_right = None
        if b.imag == 0:
            exact_right = 2 / math.pi * math.atan((1 + b.real) / (1 - b.real))
        ks = stats.kstest(ang / (2 * math.pi), "uniform")
        return {"eighth_arc_frequencies": eighths.tolist(), "right_semicircle": right,
                "right_semicircle_exact": exact_right, "ks_uniform_pullback": float(ks.statistic)}
    if isinstance(domain, hy.HalfPlane):
        w = complex(basepoint) * domain.direction.conjugate() - domain.offset
        y = (pts * domain.direction.conjugate()).imag
        ks = stats.kstest(y, "cauchy", args=(w.imag, w.real))
        n = len(pts)
        return {"ks_cauchy": float(ks.statistic), "ks_critical_1pct": 1.628 / math.sqrt(n),
                "center": w.imag, "scale": w.real}
    return {"mean_point": _pair(np.mean(pts[np.isfinite(pts)])) if np.isfinite(pts).any() else None}


def _run_sample(cfg, spec, threads):
    domain = _domain(cfg, spec) if ("domain" in cfg or spec is not None) else H.UnitDisc()
    base = _cx(cfg["basepoint"], "basepoint") if "basepoint" in cfg else _default_basepoint(domain)
    n = cfg.get("n_samples", 10000)
    seed = cfg.get("seed", 0)
    eps = cfg.get("eps_boundary", 1e-9)
    if cfg.get("method", "exact") == "walk" and not isinstance(domain, H.OracleDomain):
        pts = np.array([H.wos_sample(domain, base, eps, rng=sample_rng(seed, i), method="walk").boundary_point
                        for i in range(n)])
        how = "walk-on-spheres"
    else:
        pts, how = H.sample_boundary(domain, base, n, seed, eps, threads)
    result = {"n_samples": n, "basepoint": _pair(base), "sampling": how,
              "summary": sample_summary(domain, base, pts)}
    if isinstance(domain, H.OracleDomain):
        result["membership_sensitivity"] = H.membership_sensitivity(domain, pts)
    rows = [(i, repr(p.real), repr(p.imag)) for i, p in enumerate(pts)]
    return result, {"samples": ("sample_id; re, im: boundary point", ["sample_id", "re", "im"], rows)}


def _run_dichotomy(cfg, spec, threads):
    domain = _domain(cfg, spec)
    base = _cx(cfg["basepoint"], "basepoint") if "basepoint" in cfg else _default_basepoint(domain)
    target = _target(cfg.get("target"))
    if target is None and isinstance(domain, hy.HalfPlane) and spec.real_coefficients \
            and abs(domain.direction - 1j) < 1e-12 and domain.offset == 0:
        target = H.Box.interval(-1.0, 1.0)
    rep = H.dichotomy_experiment(spec, domain, base, cfg.get("n_samples", 200), cfg.get("iter_budget", 100000),
                                 cfg.get("seed", 0), _inf(cfg.get("escape_radius", 1e10)), target,
                                 cfg.get("min_returns", 10), cfg.get("eps_boundary", 1e-9),
                                 cfg.get("window", 3), threads, cfg.get("strict_precision", False))
    header = "sample_id; boundary_re, boundary_im: sampled boundary point; fate; returns: target visits; steps"
    return rep.to_json(), {"fates": (header, ["sample_id", "boundary_re", "boundary_im", "fate", "returns", "steps"],
                                     rep.rows)}


def _run_verify(cfg, spec, threads):
    for key in ("c0", "c1", "r"):
        if key not in cfg:
            raise ConfigError(f"<root>: '{key}' is required for verify-propd")
    return C.verify_translation_hypothesis(spec, cfg["c0"], cfg["c1"], cfg["r"], cfg.get("z_samples", 256),
                                           cfg.get("n_max", 200), cfg.get("seed", 0), threads), {}


def _sequence(cfg, spec):
    seq = cfg.get("sequence", {"kind": "power", "terms": [[1.0, 1.0]]})
    start = cfg.get("n_start", 1)
    length = cfg.get("length", 10000)
    n = np.arange(start, start + length, dtype=float)
    kind = seq["kind"]
    if kind == "power":
        terms = seq.get("terms", [[1.0, 1.0]])
        if start < 1:
            raise ConfigError("n_start must be >= 1 for power sequences")
        return sum(c * n ** -p for c, p in terms), start
    if kind == "n-log-n":
        if start < 2:
            raise ConfigError("n_start must be >= 2 for 1/(n log n)")
        return 1.0 / (n * np.log(n)), start
    if kind == "values":
        return np.asarray(seq.get("values", []), dtype=float), start
    if spec is None or not spec.is_inner:
        raise ConfigError("orbit-gap sequences need an inner map")
    steps = hy.step_sequence(spec, _cx(cfg.get("w0", 0), "w0"), hy.Disc(), length)
    return steps.gaps, 0


def _run_series(cfg, spec, threads):
    a, start = _sequence(cfg, spec)
    tests = cfg.get("tests", ["gauss", "aaronson", "decay"])
    result = {"length": len(a), "n_start": start}
    if "gauss" in tests:
        r = cfg.get("r", 1.5)
        if not 1 < r:
            raise ConfigError("r must exceed 1 for the Gauss test")
        result["gauss"] = C.gauss_divergence(a, r, cfg.get("B_cap", 1.0), n_offset=start).to_json()
    if "aaronson" in tests:
        result["aaronson"] = C.aaronson_verdict(a, start).to_json()
    if "decay" in tests:
        try:
            result["decay"] = C.fit_step_decay(a, start).to_json()
        except InsufficientData as exc:
            result["decay"] = {"skipped": str(exc)}
    return result, {}


RUNNERS = {
    "orbit": _run_orbit, "steps": _run_steps, "classify": _run_classify,
    "inner-check": _run_inner_check, "mu-invariance": _run_mu_invariance, "sample": _run_sample,
    "dichotomy": _run_dichotomy, "verify-propd": _run_verify, "series-test": _run_series,
}


def run_experiment(cfg, threads=1):
    validate(cfg)
    spec = resolve_map(cfg)
    result, tables = RUNNERS[cfg["experiment"]](cfg, spec, threads)
    resolved = dict(cfg)
    resolved.setdefault("seed", 0)
    if spec is not None:
        params = spec.to_json()
        resolved["map"] = {"name": params.pop("name"), "params": params}
        for key in MAP_PARAM_KEYS:
            resolved.pop(key, None)
    return ExperimentResult(resolved, result, tables)
