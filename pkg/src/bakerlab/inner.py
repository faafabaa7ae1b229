"""Inner-function toolkit on the unit circle.

Covers the Denjoy-Wolff point and angular derivative of the registered
inner maps, boundary orbits in double or double-double precision, the
measure ``mu_p = dlambda / |w - p|^2`` (``dlambda`` normalised arc length),
preimages of arcs under the boundary map, and recurrence statistics.
"""
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from scipy import integrate, optimize

from . import blaschke as bl
from .ddouble import DDComplex
from .errors import InsufficientData, RootSolveFailure
from .parallel import chunk_ranges, map_chunks, sample_rng

TWO_PI = 2.0 * math.pi

PARABOLIC_DERIV_TOL = 1e-8
PARABOLIC3_SECOND_TOL = 1e-6
ATTRACTING_Q_TOL = 1e-6


class Multiplicity(str, Enum):
    ATTRACTING = "Attracting"
    PARABOLIC2 = "Parabolic2"
    PARABOLIC3 = "Parabolic3"
    UNKNOWN = "Unknown"


@dataclass
class DenjoyWolffData:
    p: complex
    theta: float
    q: float
    q_root: float
    q_deriv: float
    multiplicity: Multiplicity
    derivative: complex
    second_derivative: complex
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {"p": [self.p.real, self.p.imag], "theta": self.theta, "q": self.q,
                "q_root": self.q_root, "q_deriv": self.q_deriv,
                "multiplicity": self.multiplicity.value,
                "derivative": [self.derivative.real, self.derivative.imag],
                "second_derivative": [self.second_derivative.real, self.second_derivative.imag],
                "diagnostics": self.diagnostics}


def fit_root_rate(a, n_offset=0):
    """Estimate ``lim a_n^(1/n)`` from a positive decaying sample.

    Least squares of ``log a_n`` on ``n, log n, 1, 1/n, log(n)/n`` over the
    second half of the sample; the ``log n`` terms absorb the algebraic decay
    of parabolic orbits, whose rate is 1.
    """
    a = np.asarray(a, dtype=float)
    n = np.arange(n_offset, n_offset + len(a), dtype=float)
    keep = (a > 0) & (n >= 1)
    a, n = a[keep], n[keep]
    if len(a) < 16:
        raise InsufficientData(f"need at least 16 positive terms, got {len(a)}")
    half = len(a) // 2
    a, n = a[half:], n[half:]
    ln = np.log(n)
    cols = [n, ln, np.ones_like(n), 1.0 / n, ln / n]
    X = np.column_stack(cols)
    scale = np.abs(X).max(axis=0)
    coef, *_ = np.linalg.lstsq(X / scale, np.log(a), rcond=None)
    return float(math.exp(coef[0] / scale[0]))


def find_denjoy_wolff(spec, w0=0.0j, n_steps=10000):
    """Denjoy-Wolff point, angular derivative and multiplicity of an inner map."""
    b = spec.blaschke
    fp = bl.locate_denjoy_wolff(b, complex(w0))
    orbit = bl.track_orbit(b, fp.point, complex(w0), n_steps)
    a = orbit.one_minus_abs
    q_root = fit_root_rate(a)
    q_deriv = float(b.lift_derivative(fp.theta))
    d1 = complex(b.derivative(fp.point))
    d2 = complex(b.second_derivative(fp.point))
    if q_deriv < 1.0 - ATTRACTING_Q_TOL:
        mult = Multiplicity.ATTRACTING
    elif abs(d1 - 1.0) < PARABOLIC_DERIV_TOL:
        mult = Multiplicity.PARABOLIC3 if abs(d2) < PARABOLIC3_SECOND_TOL else Multiplicity.PARABOLIC2
    else:
        mult = Multiplicity.UNKNOWN
    diagnostics = {
        "fixed_point_residual": fp.residual,
        "root_order": fp.order,
        "estimator_gap": abs(q_root - q_deriv),
        "orbit_length": len(a),
        "orbit_truncated": orbit.truncated,
        "thresholds": {"attracting_q": ATTRACTING_Q_TOL, "parabolic_derivative": PARABOLIC_DERIV_TOL,
                       "parabolic3_second_derivative": PARABOLIC3_SECOND_TOL},
    }
    return DenjoyWolffData(p=fp.point, theta=fp.theta, q=q_deriv, q_root=q_root, q_deriv=q_deriv,
                           multiplicity=mult, derivative=d1, second_derivative=d2,
                           diagnostics=diagnostics)


# -- arcs -------------------------------------------------------------------

@dataclass(frozen=True)
class CircleArc:
    """Counterclockwise half-open arc ``[start, start + length)``."""

    start: float
    length: float

    def __post_init__(self):
        if not 0.0 < self.length <= TWO_PI:
            raise ValueError(f"arc length must lie in (0, 2pi], got {self.length}")
        object.__setattr__(self, "start", float(self.start) % TWO_PI)

    @classmethod
    def between(cls, start, end):
        length = (end - start) % TWO_PI
        return cls(start, TWO_PI if length == 0.0 else length)

    @property
    def end(self):
        return self.start + self.length

    @property
    def is_full(self):
        return self.length >= TWO_PI

    def contains(self, theta):
        if self.is_full:
            return np.ones(np.shape(theta), dtype=bool) if np.ndim(theta) else True
        return np.mod(np.asarray(theta) - self.start, TWO_PI) < self.length

    def to_json(self):
        return {"start": self.start, "length": self.length}


# -- boundary orbits --------------------------------------------------------

@dataclass
class BoundaryOrbit:
    angles: np.ndarray
    truncated: bool
    log_derivative_product: float
    precision: str


def _dd_blaschke(b, w):
    out = DDComplex(b.rotation)
    for a in b.zeros:
        out = out * ((w - a) / (1.0 - w * a.conjugate()))
    return out.normalized()


def boundary_orbit(spec, theta0, n_steps, precision="double", digits=None, truncate=True):
    """Iterate ``theta -> arg g(e^{i theta})`` with angles in [0, 2 pi).

    The running sum of ``log |g'|`` measures how far a rounding error has been
    amplified.  Once it exceeds the precision budget (``digits`` decimal
    digits, default 15 for ``"double"`` and 31 for ``"extended"``) the orbit
    no longer follows the true one; it is then cut off with ``truncated`` set,
    unless ``truncate`` is false, in which case only the flag is raised.
    """
    b = spec.blaschke
    if precision not in ("double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    if digits is None:
        digits = 15 if precision == "double" else 31
    budget = digits * math.log(10.0)
    theta = float(theta0) % TWO_PI
    angles = [theta]
    lyap = 0.0
    flagged = False
    w = DDComplex(math.cos(theta), math.sin(theta)).normalized() if precision == "extended" else None
    for _ in range(n_steps):
        lyap += math.log(b.lift_derivative(theta))
        if precision == "extended":
            w = _dd_blaschke(b, w)
            theta = w.angle()
        else:
            theta = b.circle_map(theta)
        if lyap > budget:
            flagged = True
            if truncate:
                break
        angles.append(theta)
    return BoundaryOrbit(np.array(angles), flagged, lyap, precision)


# -- the measure mu_p -------------------------------------------------------

@dataclass(frozen=True)
class MuPValue:
    value: float
    quad_error: float
    infinite: bool = False


def mu_p(arc, p):
    """``(1/2pi) * integral over arc of dtheta / |e^{i theta} - p|^2`` in closed form.

    With ``t`` measured from ``arg p`` the antiderivative is
    ``-cot(t/2) / (4 pi)``; the difference is rewritten as a sine quotient to
    avoid cancellation for short arcs.
    """
    if arc.is_full:
        return MuPValue(math.inf, 0.0, True)
    t1 = (arc.start - math.atan2(p.imag, p.real)) % TWO_PI
    t2 = t1 + arc.length
    if t1 == 0.0 or t2 >= TWO_PI:
        return MuPValue(math.inf, 0.0, True)
    value = math.sin(arc.length / 2) / (math.sin(t1 / 2) * math.sin(t2 / 2)) / (4 * math.pi)
    return MuPValue(value, 8 * np.finfo(float).eps * value)


def mu_p_quadrature(arc, p, tol=1e-9):
    """Adaptive quadrature of the same integral (independent check of ``mu_p``)."""
    if arc.is_full:
        return MuPValue(math.inf, 0.0, True)

    def density(t):
        return 1.0 / abs(complex(math.cos(t), math.sin(t)) - p) ** 2

    value, err = integrate.quad(density, arc.start, arc.end, epsabs=0.0, epsrel=tol, limit=200)
    return MuPValue(value / TWO_PI, err / TWO_PI, not math.isfinite(value))


def _invert_lift(b, y):
    """Solve ``Theta(theta) = y`` on the real line.

    ``Theta(theta) - d*theta - arg(rotation)`` is a sum of ``d`` terms
    ``2 Arg(1 - a e^{-i theta})`` each in ``(-pi, pi)``, which gives a bracket.
    """
    d = b.degree
    c = b._arg_rotation
    lo, hi = (y - c - d * math.pi) / d, (y - c + d * math.pi) / d
    f_lo, f_hi = b.lift(lo) - y, b.lift(hi) - y
    if not (f_lo <= 0.0 <= f_hi):
        raise RootSolveFailure(f"lift does not bracket {y}", (lo, hi))
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    try:
        return optimize.brentq(lambda t: b.lift(t) - y, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise RootSolveFailure(str(exc), (lo, hi)) from None


def preimage_arcs(spec, arc):
    """The ``d`` arcs mapped onto ``arc`` by the boundary map, merged where adjacent."""
    if arc.is_full:
        return [CircleArc(0.0, TWO_PI)]
    b = spec.blaschke
    d = b.degree
    base = b.lift(0.0)
    first = arc.start + TWO_PI * math.ceil((base - arc.start) / TWO_PI)
    pieces = []
    for k in range(d):
        s = first + TWO_PI * k
        t0 = _invert_lift(b, s)
        t1 = _invert_lift(b, s + arc.length)
        pieces.append([t0, t1 - t0])
    pieces.sort(key=lambda x: x[0])
    merged = [pieces[0]]
    for start, length in pieces[1:]:
        prev = merged[-1]
        if abs(prev[0] + prev[1] - start) < 1e-14:
            prev[1] += length
        else:
            merged.append([start, length])
    if len(merged) > 1:
        head, tail = merged[0], merged[-1]
        if abs(tail[0] + tail[1] - (head[0] + TWO_PI)) < 1e-14:
            head[0], head[1] = tail[0], tail[1] + head[1]
            merged.pop()
    return [CircleArc(s, min(length, TWO_PI)) for s, length in merged]


@dataclass
class InvarianceCheck:
    lhs: float
    rhs: float
    rel_err: float
    lhs_quad: float
    rhs_quad: float
    rel_err_quad: float
    preimages: list

    def to_json(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "rel_err": self.rel_err, "lhs_quad": self.lhs_quad,
                "rhs_quad": self.rhs_quad, "rel_err_quad": self.rel_err_quad,
                "preimages": [a.to_json() for a in self.preimages]}


def _rel(lhs, rhs):
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def check_mu_invariance(spec, arc, dw=None, quad_tol=1e-9):
    """Compare ``mu_p(g^{-1}(arc))`` with ``q * mu_p(arc)``.

    Both sides are computed twice: from the closed form and by quadrature.
    """
    if dw is None:
        dw = find_denjoy_wolff(spec)
    pre = preimage_arcs(spec, arc)
    lhs = sum(mu_p(a, dw.p).value for a in pre)
    rhs = dw.q * mu_p(arc, dw.p).value
    lhs_q = sum(mu_p_quadrature(a, dw.p, quad_tol).value for a in pre)
    rhs_q = dw.q * mu_p_quadrature(arc, dw.p, quad_tol).value
    return InvarianceCheck(lhs, rhs, _rel(lhs, rhs), lhs_q, rhs_q, _rel(lhs_q, rhs_q), pre)


# -- recurrence statistics --------------------------------------------------

def _recurrence_chunk(b, target, theta0, budget, min_returns, lyap_budget):
    theta = theta0.copy()
    returns = np.zeros(len(theta), dtype=np.int64)
    lyap = np.zeros(len(theta))
    for _ in range(budget):
        lyap += np.log(b.lift_derivative(theta))
        new = b.circle_map(theta)
        returns += target.contains(new)
        if np.all(returns >= min_returns):
            break
        if np.array_equal(new, theta):
            break  # every orbit sits on a fixed point of the rounded map
        theta = new
    return returns, lyap > lyap_budget


@dataclass
class RecurrenceStats:
    fraction: float
    n_samples: int
    returns: np.ndarray
    precision_loss_fraction: float

    def to_json(self):
        return {"fraction": self.fraction, "n_samples": self.n_samples,
                "precision_loss_fraction": self.precision_loss_fraction,
                "returns_min": int(self.returns.min()), "returns_median": float(np.median(self.returns))}


def recurrence_stats(spec, target, n_samples, budget, min_returns, seed, threads=1):
    """Fraction of uniform boundary starts visiting ``target`` at least ``min_returns`` times.

    Orbits are run in double precision without truncation; the share whose
    derivative product exceeded the double budget is reported, not acted on.
    Samples are processed in fixed chunks so the result does not depend on
    ``threads``.
    """
    b = spec.blaschke
    theta0 = np.array([sample_rng(seed, i).uniform(0.0, TWO_PI) for i in range(n_samples)])
    lyap_budget = 15 * math.log(10.0)
    ranges = chunk_ranges(n_samples)

    def work(r):
        return _recurrence_chunk(b, target, theta0[r[0]:r[1]], budget, min_returns, lyap_budget)

    parts = map_chunks(work, ranges, threads)
    returns = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, dtype=np.int64)
    lost = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, dtype=bool)
    frac = float(np.mean(returns >= min_returns)) if n_samples else 0.0
    return RecurrenceStats(frac, n_samples, returns, float(np.mean(lost)) if n_samples else 0.0)


def circle_coverage(spec, n_cells=64, n_steps=10000, n_orbits=16, seed=0):
    """Share of the ``n_cells`` equal arcs of the circle visited by seeded boundary orbits.

    Informational: a dense orbit drives the share to 1, but no cut-off is
    implied.  Orbits run in double precision.
    """
    b = spec.blaschke
    theta = np.array([sample_rng(seed, i).uniform(0.0, TWO_PI) for i in range(n_orbits)])
    visited = np.zeros((n_orbits, n_cells), dtype=bool)
    rows = np.arange(n_orbits)
    for _ in range(n_steps):
        cells = np.minimum((theta / TWO_PI * n_cells).astype(np.int64), n_cells - 1)
        visited[rows, cells] = True
        theta = np.asarray(b.circle_map(theta))
    share = visited.mean(axis=1)
    return {"n_cells": n_cells, "n_steps": n_steps, "n_orbits": n_orbits, "seed": seed,
            "mean": float(share.mean()), "min": float(share.min()), "per_orbit": share.tolist()}
