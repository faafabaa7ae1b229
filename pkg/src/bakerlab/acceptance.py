"""Acceptance checks 1-10, shared by ``bakerlab selftest`` and the test suite.

Each check returns ``(passed, detail)``; wall time against the budget is part
of the verdict.
"""
import math
import time

import numpy as np

from . import classify as C
from . import harmonic as H
from . import hyperbolic as hy
from . import inner, maps
from .experiments import boundary_convergence, random_arcs, run_experiment, sample_summary
from .parallel import default_threads, sample_rng

SUITE_SEED = 7
BUDGETS = {1: 1.0, 2: 10.0, 3: 5.0, 4: 5.0, 5: 30.0, 6: 120.0, 7: 1.0, 8: 60.0, 9: 1.0, 10: None}


def _fmt(x):
    return f"{x:.6g}"


def metric_closed_forms():
    notes = []
    ok = abs(hy.dist_disc(0, 0.5) - math.log(3)) < 1e-12
    notes.append(f"dist(0,1/2)-ln3={hy.dist_disc(0, 0.5) - math.log(3):.1e}")
    rng = sample_rng(SUITE_SEED, 0)
    n = 10_000
    re = 10 ** rng.uniform(-2, 2, size=(n, 2))
    im = rng.uniform(-10, 10, size=(n, 2))
    w = re + 1j * im
    right = hy.HalfPlane()
    worst = 0.0
    for w1, w2 in w:
        a = hy.dist_halfplane(right, w1, w2)
        b = hy.dist_disc(hy.cayley(w1), hy.cayley(w2))
        worst = max(worst, abs(a - b) / max(1.0, a))
    ok &= worst < 1e-12
    notes.append(f"cayley_max_err={worst:.1e}")
    models = [
        (maps.registry_get("mobius", {"a": 0.5}), 0.3j, hy.Disc()),
        (maps.registry_get("parabolic-mobius", {}), 0.2, hy.Disc()),
        (maps.registry_get("blaschke", {}), 0.0, hy.Disc()),
        (maps.registry_get("tan", {"half_plane": "+"}), 0.3 + 2j, hy.HalfPlane(1j, 0.0)),
        (maps.registry_get("affine", {"lam": 2}), 1 + 1j, hy.HalfPlane()),
        (maps.registry_get("doubling-exp", {}), 3 + 1j, hy.HalfPlane(1, 1.0)),
    ]
    rise = 0.0
    for spec, z0, metric in models:
        d = hy.step_sequence(spec, z0, metric, 200).d
        rise = max(rise, float(np.max((d[1:] - d[:-1]) / np.maximum(1.0, d[:-1]))))
    ok &= rise <= 1e-12
    notes.append(f"max_step_increase={rise:.1e}")
    return ok, " ".join(notes)


def doubly_parabolic_rate():
    spec = maps.registry_get("blaschke", {})
    steps = hy.step_sequence(spec, 0j, hy.Disc(), 10_000)
    n = steps.n
    sel = (n >= 1000) & (n <= 10_000)
    dev = float(np.max(np.abs(2 * n[sel] * steps.d[sel] - 1)))
    dw = inner.find_denjoy_wolff(spec, 0j, 10_000)
    cls = C.classify_inner(dw, steps)
    ok = (dev < 0.1 and cls.verdict is C.Verdict.DOUBLY_PARABOLIC and abs(dw.q - 1) <= 1e-6
          and abs(dw.second_derivative) < 1e-6)
    return ok, (f"max|2n*d_n-1|={_fmt(dev)} verdict={cls.verdict.value} q={_fmt(dw.q)} "
                f"|g''(p)|={abs(dw.second_derivative):.1e}")


def hyperbolic_inner_model():
    spec = maps.registry_get("mobius", {"a": 0.5})
    dw = inner.find_denjoy_wolff(spec, 0j, 2000)
    steps = hy.step_sequence(spec, 0j, hy.Disc(), 2000)
    tail = float(np.sum(steps.gaps[50:]))
    frac = boundary_convergence(spec, dw.p, 100, 200, 1e-6, SUITE_SEED)
    ok = (abs(dw.p - 1) < 1e-12 and abs(dw.q_root - 1 / 3) < 1e-3 and abs(dw.q_deriv - 1 / 3) < 1e-3
          and tail < 1e-6 and frac >= 0.99)
    return ok, (f"p={_fmt(dw.p.real)} q_root={_fmt(dw.q_root)} q_deriv={_fmt(dw.q_deriv)} "
                f"tail_sum_from_50={tail:.1e} boundary_convergence={frac}")


def mu_invariance():
    worst = 0.0
    for name, params in (("mobius", {"a": 0.5}), ("blaschke", {})):
        spec = maps.registry_get(name, params)
        dw = inner.find_denjoy_wolff(spec)
        for arc in random_arcs(dw.p, 20, 0.1, SUITE_SEED):
            chk = inner.check_mu_invariance(spec, arc, dw, 1e-9)
            worst = max(worst, chk.rel_err, chk.rel_err_quad)
    closed = inner.mu_p(inner.CircleArc(math.pi / 2, math.pi), 1 + 0j).value
    ok = worst < 1e-6 and abs(closed - 1 / (2 * math.pi)) <= 1e-10
    return ok, f"max_rel_err={worst:.1e} mu_p(half circle)-1/(2pi)={closed - 1 / (2 * math.pi):.1e}"


def fatou_pipeline():
    spec = maps.registry_get("fatou", {})
    ver = C.verify_translation_hypothesis(spec, 0.55, 2.0, 2.0, threads=default_threads())
    metric = hy.HalfPlane(1, 2.0, bound_only=True)
    steps = hy.step_sequence(spec, 10, metric, 100_000)
    n = steps.n
    sel = (n >= 1000) & (n <= 100_000)
    nd = n[sel] * steps.d[sel]
    cls = C.classify_plane(spec, 10, metric, 10_000)
    fit = C.fit_step_decay(steps)
    ok = (ver["passed"] and nd.min() >= 0.9 and nd.max() <= 1.1
          and cls.verdict is C.Verdict.DOUBLY_PARABOLIC and fit.satisfied and fit.r_est > 1)
    return ok, (f"verify={ver['passed']} (c1_effective={_fmt(ver['c1_effective'])}) "
                f"n*d_n in [{_fmt(nd.min())}, {_fmt(nd.max())}] verdict={cls.verdict.value} "
                f"fit_satisfied={fit.satisfied} r_est={_fmt(fit.r_est)}")


def real_line_dichotomy():
    threads = default_threads()
    tan = maps.registry_get("tan", {"half_plane": "+"})
    rep = H.dichotomy_experiment(tan, hy.HalfPlane(1j, 0.0), 1j, 200, 10 ** 6, SUITE_SEED,
                                 target=H.Box.interval(-1.0, 1.0), min_returns=10, threads=threads)
    aff = maps.registry_get("affine", {"lam": 2})
    contrast = H.dichotomy_experiment(aff, hy.HalfPlane(), 1.0, 100, 10 ** 4, SUITE_SEED, threads=threads)
    rec, esc = rep.fraction(H.Fate.RECURRENT), rep.fraction(H.Fate.ESCAPING)
    aff_esc = contrast.fraction(H.Fate.ESCAPING)
    ok = rec >= 0.9 and esc <= 0.1 and aff_esc == 1.0
    fr = rep.to_json()["fractions"]
    return ok, (f"tan fractions={fr} precision_lost={rep.precision_lost} "
                f"affine escaping={aff_esc}")


def hyperbolic_growth():
    spec = maps.registry_get("doubling-exp", {})
    orbit = maps.iterate(spec, 10, 60, rel_error_threshold=None)
    growth = C.rippon_stallard_check(orbit)
    metric = hy.HalfPlane(1, 1.0)
    cls = C.classify_plane(spec, 10, metric, 60)
    d = hy.step_sequence(spec, 10, metric, 60).d
    dev = float(np.max(np.abs(d[5:] - math.log(2))))
    ok = (growth.K is not None and growth.K >= 1.9 and growth.sqrt_sum == "Finite"
          and cls.verdict is C.Verdict.HYPERBOLIC and dev <= 0.05)
    return ok, f"K={growth.K} sqrt_sum={growth.sqrt_sum} verdict={cls.verdict.value} max|d_n-ln2|={_fmt(dev)}"


def _walk_points(domain, base, n, seed):
    return np.array([H.wos_sample(domain, base, 1e-9, rng=sample_rng(seed, i), method="walk").boundary_point
                     for i in range(n)])


def harmonic_sampling():
    notes = []
    ok = True
    disc = H.UnitDisc()
    exact_right = 2 / math.pi * math.atan(3)
    upper = hy.HalfPlane(1j, 0.0)
    crit = 1.628 / math.sqrt(10_000)
    for label, draw in (("exact", lambda d, b, n: H.sample_boundary(d, b, n, SUITE_SEED)[0]),
                        ("walk", lambda d, b, n: _walk_points(d, b, n, SUITE_SEED))):
        s0 = sample_summary(disc, 0j, draw(disc, 0j, 100_000))
        eighth = max(abs(f - 0.125) for f in s0["eighth_arc_frequencies"])
        right = sample_summary(disc, 0.5, draw(disc, 0.5, 100_000))["right_semicircle"]
        ks = sample_summary(upper, 1j, draw(upper, 1j, 10_000))["ks_cauchy"]
        ok &= eighth <= 0.01 and abs(right - exact_right) <= 0.01 and ks < crit
        notes.append(f"{label}: max|eighth-1/8|={eighth:.4f} right={right:.4f} ks={ks:.4f}")
    notes.append(f"(targets: right={exact_right:.4f}, ks<{crit:.4f})")
    return ok, " ".join(notes)


def series_tests():
    n = np.arange(1, 10_001, dtype=float)
    g1 = C.gauss_divergence(1 / n, n_offset=1).verdict
    g2 = C.gauss_divergence(1 / n ** 2, n_offset=1).verdict
    m = np.arange(2, 10_002, dtype=float)
    g3 = C.gauss_divergence(1 / (m * np.log(m)), n_offset=2).verdict
    bad = C.fit_step_decay(2 / n, n_offset=1)
    good = C.fit_step_decay(1 / n + 5 / n ** 1.5, n_offset=1)
    ok = (g1 is C.GaussVerdict.DIVERGENT and g2 is C.GaussVerdict.NOT_MET
          and g3 is C.GaussVerdict.NOT_MET and not bad.satisfied
          and good.satisfied and abs(good.r_est - 1.5) <= 0.1)
    return ok, (f"1/n={g1.value} 1/n^2={g2.value} 1/(n ln n)={g3.value} "
                f"2/n satisfied={bad.satisfied} 1/n+5/n^1.5 satisfied={good.satisfied} r_est={_fmt(good.r_est)}")


DETERMINISM_CONFIGS = [
    {"experiment": "orbit", "map": "tan", "z0": 0.5, "budget": 500},
    {"experiment": "steps", "map": "fatou", "z0": 10, "N": 2000},
    {"experiment": "classify", "map": "blaschke", "N": 2000},
    {"experiment": "inner-check", "map": "mobius", "a": 0.5, "n_steps": 500, "n_boundary": 20,
     "recurrence": {"target": [0.4, 0.2], "n_samples": 40, "budget": 2000}},
    {"experiment": "mu-invariance", "map": "blaschke", "n_arcs": 5},
    {"experiment": "sample", "map": "tan", "n_samples": 500, "seed": 3},
    {"experiment": "sample", "map": "baker-dominguez", "n_samples": 2, "seed": 3,
     "domain": {"kind": "oracle", "entry": {"kind": "strip", "re_min": 1, "half_width": 1.5707963267948966},
                "budget": 30}},
    {"experiment": "dichotomy", "map": "tan", "n_samples": 40, "iter_budget": 20000, "seed": 7},
    {"experiment": "dichotomy", "map": "affine", "lam": 2, "n_samples": 40, "iter_budget": 2000},
    {"experiment": "verify-propd", "map": "fatou", "c0": 0.55, "c1": 2, "r": 2, "z_samples": 64},
    {"experiment": "series-test", "sequence": {"kind": "power", "terms": [[1, 1], [5, 1.5]]}},
]


def determinism():
    from .cli import to_plain
    mismatched = []
    for cfg in DETERMINISM_CONFIGS:
        payloads = [to_plain(run_experiment(dict(cfg), t).result) for t in (1, 8, 1)]
        if not payloads[0] == payloads[1] == payloads[2]:
            mismatched.append(cfg["experiment"])
    return not mismatched, f"{len(DETERMINISM_CONFIGS)} configs, mismatched={mismatched}"


CRITERIA = {
    1: metric_closed_forms, 2: doubly_parabolic_rate, 3: hyperbolic_inner_model, 4: mu_invariance,
    5: fatou_pipeline, 6: real_line_dichotomy, 7: hyperbolic_growth, 8: harmonic_sampling,
    9: series_tests, 10: determinism,
}


def run_criterion(number):
    t0 = time.perf_counter()
    passed, detail = CRITERIA[number]()
    seconds = time.perf_counter() - t0
    budget = BUDGETS[number]
    if budget is not None and seconds > budget:
        passed = False
        detail += f" [over time budget {budget:g}s]"
    return bool(passed), detail, seconds


def run_all(only=None):
    for number in sorted(only or CRITERIA):
        passed, detail, seconds = run_criterion(number)
        yield number, passed, detail, seconds
