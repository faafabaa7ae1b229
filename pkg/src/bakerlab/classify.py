"""Type classification of Baker domains and the series-condition verdicts."""
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from scipy import stats

from . import hyperbolic as hy
from . import maps
from .errors import InsufficientData, OverflowSignal, PoleSignal, PreconditionViolated
from .inner import Multiplicity, fit_root_rate
from .parallel import chunk_ranges, map_chunks, sample_rng

THRESHOLDS = {
    "trend_slope": -0.5,
    "trend_r2": 0.9,
    "flat_slope": -0.1,
    "flat_floor": 1e-3,
    "q_tol": 1e-6,
    "ratio_tol": 1e-3,
    "limsup_proxy": 1e-3,
    "tail_start_fraction": 0.1,
    "eps_floor": 1e-15,
    "thmc_margin": 1e-3,
    "aaronson_root": 1e-3,
    "aaronson_tail": 1e-9,
    "raabe_margin": 0.25,
    "comparison_exponent": 0.9,
    "K_min": 1.0 + 1e-6,
    "geometric_raabe": 4.0,
}


class Verdict(str, Enum):
    HYPERBOLIC = "Hyperbolic"
    SIMPLY_PARABOLIC = "SimplyParabolic"
    DOUBLY_PARABOLIC = "DoublyParabolic"
    HYPERBOLIC_OR_SIMPLY_PARABOLIC = "HyperbolicOrSimplyParabolic"
    UNRESOLVED = "Unresolved"


@dataclass
class BakerClassification:
    verdict: Verdict
    evidence: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))

    def to_json(self):
        return {"verdict": self.verdict.value, "evidence": self.evidence, "thresholds": self.thresholds}


@dataclass
class Trend:
    slope: float
    intercept: float
    r2: float
    tail_mean: float

    @property
    def to_zero(self):
        return self.slope < THRESHOLDS["trend_slope"] and self.r2 > THRESHOLDS["trend_r2"]

    @property
    def flat(self):
        return self.slope > THRESHOLDS["flat_slope"] and self.tail_mean > THRESHOLDS["flat_floor"]

    def to_json(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "tail_mean": self.tail_mean}


def step_trend(d, n_offset=0):
    """Log-log regression of ``d_n`` over the tail ``[N/10, N]``."""
    d = np.asarray(d, dtype=float)
    n = np.arange(n_offset, n_offset + len(d), dtype=float)
    start = max(1, int(len(d) * THRESHOLDS["tail_start_fraction"]))
    n, d = n[start:], d[start:]
    keep = (d > 0) & (n >= 1)
    tail_mean = float(np.mean(d)) if len(d) else 0.0
    if keep.sum() < 3:
        return Trend(-math.inf, 0.0, 1.0, tail_mean)
    fit = stats.linregress(np.log(n[keep]), np.log(d[keep]))
    r2 = fit.rvalue ** 2 if math.isfinite(fit.rvalue) else 0.0
    return Trend(float(fit.slope), float(fit.intercept), float(r2), tail_mean)


def _ratio_limit(x):
    """Median of ``x_n / x_{n+1}`` over the last quarter (``x`` positive)."""
    x = np.asarray(x, dtype=float)
    tail = x[-max(4, len(x) // 4):]
    tail = tail[tail > 0]
    if len(tail) < 2:
        return None
    return float(np.median(tail[:-1] / tail[1:]))


def classify_inner(dw, steps):
    """Verdict from the Denjoy-Wolff data, cross-checked against the steps ``d_n``."""
    if len(steps) < 64:
        raise InsufficientData(f"need at least 64 steps, got {len(steps)}")
    trend = step_trend(steps.d, steps.n_offset)
    evidence = {"q_est": dw.q, "q_root": dw.q_root, "multiplicity": dw.multiplicity.value,
                "b_est": trend.tail_mean, "trend": trend.to_json(),
                "second_derivative_abs": abs(dw.second_derivative)}
    if dw.q < 1.0 - THRESHOLDS["q_tol"]:
        claim, consistent = Verdict.HYPERBOLIC, trend.flat
    elif dw.multiplicity is Multiplicity.PARABOLIC3:
        claim, consistent = Verdict.DOUBLY_PARABOLIC, trend.to_zero
    elif dw.multiplicity is Multiplicity.PARABOLIC2:
        claim, consistent = Verdict.SIMPLY_PARABOLIC, trend.flat
    else:
        claim, consistent = Verdict.UNRESOLVED, True
    evidence["derivative_verdict"] = claim.value
    evidence["step_consistent"] = bool(consistent)
    return BakerClassification(claim if consistent else Verdict.UNRESOLVED, evidence)


def _limsup_proxy(points, metric):
    """Tail maximum of ``|z_{n+1} - z_n| / dist(z_n, boundary of the model)``."""
    if isinstance(metric, hy.HalfPlane):
        dist = (points[:-1] * metric.direction.conjugate() - metric.offset).real
    elif isinstance(metric, hy.Disc):
        dist = 1.0 - np.abs(points[:-1])
    else:
        dist = np.array([metric.dist_to_boundary(z) for z in points[:-1]])
    q = np.abs(np.diff(points)) / dist
    start = int(len(q) * THRESHOLDS["tail_start_fraction"])
    return float(np.max(q[start:])) if len(q[start:]) else 0.0


def classify_plane(spec, z0, metric, n):
    """Verdict from the step sequence of an orbit in a model domain.

    ``d_n -> 0`` decides doubly parabolic for exact metrics and upper bounds
    alike.  Otherwise the growth ratio of the orbit refines the verdict:
    ``|f^{n+1}| / |f^n|`` in the plane, ``(1 - |z_n|) / (1 - |z_{n+1}|)`` in the disc.
    """
    steps = hy.step_sequence(spec, z0, metric, n)
    if len(steps) < 16:
        raise InsufficientData(f"need at least 16 steps, got {len(steps)}")
    trend = step_trend(steps.d, steps.n_offset)
    exact = not steps.is_upper_bound
    pts = steps.points
    if isinstance(metric, hy.Disc):
        gaps = steps.gaps if steps.gaps is not None else 1.0 - np.abs(pts)
        incr = steps.increments if steps.increments is not None else np.abs(np.diff(pts))
        ratio = _ratio_limit(gaps)
        q = incr / gaps[:-1]
        proxy = float(np.max(q[int(len(q) * THRESHOLDS["tail_start_fraction"]):]))
    else:
        ratio = _ratio_limit(1.0 / np.abs(pts))
        proxy = _limsup_proxy(pts, metric)
    evidence = {"trend": trend.to_json(), "b_est": trend.tail_mean, "ratio_limit": ratio,
                "limsup_proxy": proxy, "metric": metric.to_json(), "is_upper_bound": not exact,
                "n_steps": len(steps)}
    if trend.to_zero:
        return BakerClassification(Verdict.DOUBLY_PARABOLIC, evidence)
    growing = ratio is not None and ratio > 1.0 + THRESHOLDS["ratio_tol"]
    separated = exact and (trend.flat or proxy > THRESHOLDS["limsup_proxy"])
    if growing:
        return BakerClassification(Verdict.HYPERBOLIC, evidence)
    if separated:
        if ratio is not None and abs(ratio - 1.0) <= THRESHOLDS["ratio_tol"]:
            return BakerClassification(Verdict.SIMPLY_PARABOLIC, evidence)
        return BakerClassification(Verdict.HYPERBOLIC_OR_SIMPLY_PARABOLIC, evidence)
    return BakerClassification(Verdict.UNRESOLVED, evidence)


# -- series tests -----------------------------------------------------------

class SeriesVerdict(str, Enum):
    CONVERGES = "Converges_AEConvergence"
    DIVERGES = "Diverges_Conservative"
    INCONCLUSIVE = "Inconclusive"


class GaussVerdict(str, Enum):
    DIVERGENT = "DivergentByGauss"
    NOT_MET = "ConditionNotMet"


@dataclass
class GaussResult:
    verdict: GaussVerdict
    n0: int | None
    r: float
    b_cap: float

    def to_json(self):
        return {"verdict": self.verdict.value, "n0": self.n0, "r": self.r, "B_cap": self.b_cap}


def _indexed(a, n_offset):
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        raise ValueError("series terms must be positive")
    n = np.arange(n_offset, n_offset + len(a), dtype=float)
    return a, n


def gauss_divergence(a, r=1.5, b_cap=1.0, n_offset=1):
    """Sufficient divergence test: ``a_n / a_{n+1} <= 1 + 1/n + B/n^r`` for all sampled ``n >= n0``.

    ``n0`` is the smallest index from which the inequality holds to the end of
    the sample; the verdict requires ``n0`` in the first half.
    """
    if not r > 1:
        raise PreconditionViolated("r must exceed 1")
    a, n = _indexed(a, n_offset)
    keep = n[:-1] >= 1
    ratio = a[:-1][keep] / a[1:][keep]
    nn = n[:-1][keep]
    bound = 1.0 + 1.0 / nn + b_cap / nn ** r
    ok = ratio <= bound * (1.0 + 4 * np.finfo(float).eps)
    if len(ok) == 0 or not ok[-1]:
        return GaussResult(GaussVerdict.NOT_MET, None, r, b_cap)
    bad = np.nonzero(~ok)[0]
    first = 0 if len(bad) == 0 else bad[-1] + 1
    n0 = int(nn[first])
    verdict = GaussVerdict.DIVERGENT if first <= len(ok) // 2 else GaussVerdict.NOT_MET
    return GaussResult(verdict, n0, r, b_cap)


@dataclass
class AaronsonResult:
    verdict: SeriesVerdict
    route: str
    evidence: dict

    def to_json(self):
        return {"verdict": self.verdict.value, "route": self.route, "evidence": self.evidence}


def aaronson_verdict(a, n_offset=0):
    """Convergence of ``sum a_n`` for ``a_n = 1 - |g^n(w)|``; Inconclusive is the safe answer."""
    a = np.asarray(a, dtype=float)
    if len(a) < 64 or np.any(~(a > 0)):
        return AaronsonResult(SeriesVerdict.INCONCLUSIVE, "insufficient", {"length": len(a)})
    a, n = _indexed(a, n_offset)
    evidence = {"length": len(a), "partial_sum": float(a.sum())}
    try:
        q = fit_root_rate(a, n_offset)
    except InsufficientData:
        q = None
    evidence["q_est"] = q
    if q is not None and q < 1.0 - THRESHOLDS["aaronson_root"]:
        return AaronsonResult(SeriesVerdict.CONVERGES, "root", evidence)

    half = len(a) // 2
    tail_a, tail_n = a[half:], n[half:]
    ratios = tail_a[1:] / tail_a[:-1]
    rho = float(ratios.max())
    if rho < 1.0:
        tail_bound = float(tail_a[-1] * rho / (1.0 - rho))
        evidence["tail_bound"] = tail_bound
        if tail_bound < THRESHOLDS["aaronson_tail"]:
            return AaronsonResult(SeriesVerdict.CONVERGES, "ratio-tail", evidence)
    pos = tail_n[:-1] >= 1
    raabe = float(np.min(tail_n[:-1][pos] * (tail_a[:-1][pos] / tail_a[1:][pos] - 1.0))) if pos.any() else 0.0
    evidence["raabe_min"] = raabe
    if raabe > 1.0 + THRESHOLDS["raabe_margin"]:
        return AaronsonResult(SeriesVerdict.CONVERGES, "raabe", evidence)

    gauss = gauss_divergence(a, n_offset=n_offset) if n_offset + len(a) > 2 else None
    if gauss is not None:
        evidence["gauss"] = gauss.to_json()
        if gauss.verdict is GaussVerdict.DIVERGENT:
            return AaronsonResult(SeriesVerdict.DIVERGES, "gauss", evidence)
    p = THRESHOLDS["comparison_exponent"]
    pos = tail_n >= 1
    if pos.any() and np.all(tail_a[pos] >= tail_n[pos] ** -p):
        return AaronsonResult(SeriesVerdict.DIVERGES, "comparison", evidence)
    return AaronsonResult(SeriesVerdict.INCONCLUSIVE, "none", evidence)


@dataclass
class DecayFit:
    satisfied: bool
    r_est: float
    c_est: float
    stderr: float

    def to_json(self):
        return {"satisfied": self.satisfied, "r_est": self.r_est, "c_est": self.c_est,
                "stderr": self.stderr}


def fit_step_decay(d, n_offset=0):
    """Test ``d_n <= 1/n + O(1/n^r)`` with some ``r > 1``.

    Regresses ``log(max(d_n - 1/n, eps * d_n))`` on ``log n``; the bound holds
    when ``-slope`` exceeds 1 at 95% confidence, or trivially when
    ``d_n <= 1/n`` throughout (then ``r_est`` is infinite).
    """
    if hasattr(d, "d"):
        d, n_offset = d.d, d.n_offset
    d = np.asarray(d, dtype=float)
    if len(d) < 256:
        raise InsufficientData(f"need at least 256 steps, got {len(d)}")
    n = np.arange(n_offset, n_offset + len(d), dtype=float)
    keep = n >= 1
    d, n = d[keep], n[keep]
    excess = d - 1.0 / n
    if np.all(excess <= 1e-12 / n):
        return DecayFit(True, math.inf, 0.0, 0.0)
    y = np.log(np.maximum(excess, THRESHOLDS["eps_floor"] * d))
    fit = stats.linregress(np.log(n), y)
    r_est = -float(fit.slope)
    t95 = float(stats.t.ppf(0.975, len(n) - 2))
    ok = r_est - t95 * fit.stderr > 1.0 + THRESHOLDS["thmc_margin"]
    return DecayFit(bool(ok), r_est, float(math.exp(fit.intercept)), float(fit.stderr))


# -- growth conditions ------------------------------------------------------

@dataclass
class GrowthCheck:
    K: float | None
    sqrt_sum: str
    sqrt_sum_bound: float | None
    evidence: dict

    def to_json(self):
        return {"eqK": self.K, "sqrt_sum": self.sqrt_sum, "sqrt_sum_bound": self.sqrt_sum_bound,
                "evidence": self.evidence}


def rippon_stallard_check(orbit):
    """Uniform growth factor ``K`` and the verdict on ``sum 1/sqrt|f^n(z)|``.

    Accepts an OrbitRecord or a sequence of orbit points.
    """
    pts = orbit.points if hasattr(orbit, "points") else orbit
    m = np.abs(np.asarray(pts, dtype=complex))
    m = m[np.isfinite(m)]
    if len(m) < 2 or np.any(m == 0):
        return GrowthCheck(None, "Inconclusive", None, {"length": len(m)})
    ratios = m[1:] / m[:-1]
    k_min = float(ratios.min())
    partial = float(np.sum(1.0 / np.sqrt(m)))
    half = len(ratios) // 2
    tail_ratio = float(ratios[half:].min())
    # geometric growth: n * (ratio - 1) keeps growing instead of levelling off as for powers of n
    idx = np.arange(1, len(ratios) + 1, dtype=float)
    raabe = float(np.min(idx[half:] * (ratios[half:] - 1.0)))
    geometric = tail_ratio > 1.0 + THRESHOLDS["ratio_tol"] and raabe > THRESHOLDS["geometric_raabe"]
    K = k_min if geometric and k_min >= THRESHOLDS["K_min"] else None
    evidence = {"min_ratio": k_min, "tail_min_ratio": tail_ratio, "tail_min_raabe": raabe,
                "partial_sum": partial, "length": len(m)}
    if geometric:
        s = 1.0 / math.sqrt(tail_ratio)
        bound = partial + (1.0 / math.sqrt(m[-1])) * s / (1.0 - s)
        return GrowthCheck(K, "Finite", bound, evidence)
    n = np.arange(1, len(m) + 1, dtype=float)
    tail = slice(len(m) // 2, None)
    if len(m) >= 16:
        slope = stats.linregress(np.log(n[tail]), np.log(m[tail])).slope
        evidence["growth_exponent"] = float(slope)
        if slope < 2.0 - 0.1:
            return GrowthCheck(K, "Divergent", None, evidence)
    return GrowthCheck(K, "Inconclusive", None, evidence)


# -- translation-type hypothesis verifier ------------------------------------

def _sum_bound(c0, c, r, terms=10000):
    """Upper bound for ``sum_{k>=1} c0 / (c + k - 3/2)^r`` (partial sum plus integral tail)."""
    k = np.arange(1, terms + 1, dtype=float)
    partial = float(np.sum(c0 / (c + k - 1.5) ** r))
    tail = c0 / ((r - 1.0) * (c + terms - 1.5) ** (r - 1.0))
    return partial + tail


def enlarge_c1(c0, c1, r):
    """Smallest ``c >= c1`` with the summed bound below 1/2."""
    if _sum_bound(c0, c1, r) < 0.5:
        return c1
    hi = max(c1, 1.0)
    while _sum_bound(c0, hi, r) >= 0.5:
        hi *= 2.0
    lo = c1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _sum_bound(c0, mid, r) < 0.5:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12 * hi:
            break
    return hi


def _sample_points(seed, index, c, span):
    rng = sample_rng(seed, index)
    x = c + 10.0 ** rng.uniform(-6.0, math.log10(span))
    y = rng.uniform(-span, span)
    return complex(x, y)


def _check_sample(spec, a, c0, c1, c1_eff, r, n_max, seed, index, span):
    out = {"hypothesis": None, "induction": None, "absorption": None}
    u = _sample_points(seed, 2 * index, c1, span)
    z = a * u
    try:
        fz = maps.evaluate(spec, z)
        lhs = abs(fz - z - a)
        rhs = c0 / u.real ** r
        if not lhs < rhs:
            out["hypothesis"] = {"z": [z.real, z.imag], "lhs": lhs, "rhs": rhs}
    except (PoleSignal, OverflowSignal) as exc:
        out["hypothesis"] = {"z": [z.real, z.imag], "error": str(exc)}

    u = _sample_points(seed, 2 * index + 1, c1_eff, span)
    z = a * u
    c0s = c0 / abs(a)
    x0 = u.real
    acc = 0.0
    w = z
    for n in range(1, n_max + 1):
        try:
            w = maps.evaluate(spec, w)
        except (PoleSignal, OverflowSignal) as exc:
            out["induction"] = {"z": [z.real, z.imag], "n": n, "error": str(exc)}
            break
        acc += c0s / (x0 + n - 1.5) ** r
        xn = (w / a).real
        if not xn > x0 + n - acc:
            out["induction"] = {"z": [z.real, z.imag], "n": n, "re": xn, "bound": x0 + n - acc}
            break
        if not xn > c1_eff + n - 0.5:
            out["absorption"] = {"z": [z.real, z.imag], "n": n, "re": xn, "bound": c1_eff + n - 0.5}
            break
    return out


def verify_translation_hypothesis(spec, c0, c1, r, z_samples=256, n_max=200, seed=0, threads=1,
                                  span=50.0):
    """Check ``f(z) = z + a + h(z)`` with ``|h(z)| < c0 / Re(z/a)^r`` on ``Re(z/a) > c1``.

    Three checks on seeded samples, in coordinates ``u = z/a``:
    the bound on ``h`` at points with ``Re u > c1``; the summed constant
    condition, where ``c1`` is enlarged to the smallest admissible value if
    needed; and the growth ``Re(f^n(z)/a) > Re(z/a) + n - partial sums`` with
    its consequence ``> c1 + n - 1/2`` along orbits from the enlarged half-plane.
    """
    if not r > 1:
        raise PreconditionViolated(f"r must exceed 1, got {r}")
    if not c1 > 0.5:
        raise PreconditionViolated(f"c1 must exceed 1/2, got {c1}")
    if not c0 > 0:
        raise PreconditionViolated(f"c0 must be positive, got {c0}")
    if spec.baker_direction is None:
        raise PreconditionViolated(f"map {spec.name} has no translation direction")
    a = complex(spec.baker_direction)
    c0s = c0 / abs(a)
    sum_at_c1 = _sum_bound(c0s, c1, r)
    c1_eff = enlarge_c1(c0s, c1, r)
    sum_eff = _sum_bound(c0s, c1_eff, r)
    ranges = chunk_ranges(z_samples)

    def work(rg):
        return [_check_sample(spec, a, c0, c1, c1_eff, r, n_max, seed, i, span)
                for i in range(rg[0], rg[1])]

    parts = map_chunks(work, ranges, threads)
    results = [x for part in parts for x in part]
    violations = {key: [x[key] for x in results if x[key] is not None]
                  for key in ("hypothesis", "induction", "absorption")}
    checks = {
        "hypothesis_bound": not violations["hypothesis"],
        "constant_condition": sum_eff < 0.5,
        "orbit_growth": not violations["induction"] and not violations["absorption"],
    }
    return {
        "passed": all(checks.values()),
        "checks": checks,
        "direction": [a.real, a.imag],
        "c0": c0, "c1": c1, "r": r,
        "c0_rescaled": c0s,
        "constant_sum_at_c1": sum_at_c1,
        "c1_effective": c1_eff,
        "c1_enlarged": c1_eff > c1,
        "constant_sum_effective": sum_eff,
        "z_samples": z_samples, "n_max": n_max, "seed": seed,
        "violations": {k: v[:5] for k, v in violations.items()},
        "violation_counts": {k: len(v) for k, v in violations.items()},
    }


def tan_envelope_c1():
    """Height above which ``2e^{-2y} / (1 - e^{-2y}) < 3 e^{-2y}``, i.e. ``e^{-2y} < 1/3``."""
    return 0.5 * math.log(3.0)
