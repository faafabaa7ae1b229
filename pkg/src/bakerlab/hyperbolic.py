"""Hyperbolic distances and step sequences.

Normalisation: the disc density is ``2|dz| / (1 - |z|^2)``, so the half-plane
``{Re w > 0}`` carries density ``|dw| / Re w``.
"""
from dataclasses import dataclass, field
import csv
import math

import numpy as np

from . import blaschke as bl
from .errors import (DomainViolation, InteriorFixedPoint, NoConvergence, OrbitLeftDomain,
                     OverflowSignal, PoleSignal, SegmentLeavesDomain)
from .maps import Termination, iterate


@dataclass(frozen=True)
class Disc:
    kind = "disc"

    def contains(self, z):
        return abs(z) < 1.0

    def to_json(self):
        return {"kind": "disc"}


@dataclass(frozen=True)
class HalfPlane:
    """``{z : Re(z / direction) > offset}``; ``bound_only`` if it is a proper subdomain of U."""

    direction: complex = 1 + 0j
    offset: float = 0.0
    bound_only: bool = False
    kind = "halfplane"

    def __post_init__(self):
        if abs(abs(self.direction) - 1.0) > 1e-12:
            raise ValueError("half-plane direction must have unit modulus")

    def normal_coordinate(self, z):
        """Map to the right half-plane: ``z / direction - offset``."""
        return z * self.direction.conjugate() - self.offset

    def contains(self, z):
        return self.normal_coordinate(complex(z)).real > 0.0

    def boundary_distance(self, z):
        return self.normal_coordinate(complex(z)).real

    def to_json(self):
        return {"kind": "halfplane", "direction": [self.direction.real, self.direction.imag],
                "offset": self.offset, "bound_only": self.bound_only}


@dataclass(frozen=True)
class DomainUpperBound:
    """Metric bounded above through ``rho_U <= 2 / dist(z, boundary)``."""

    dist_to_boundary: object
    kind = "upper_bound"

    def to_json(self):
        return {"kind": "upper_bound", "estimator": getattr(self.dist_to_boundary, "__name__", "callable")}


def dist_disc(z1, z2):
    """Hyperbolic distance in the unit disc."""
    z1, z2 = complex(z1), complex(z2)
    if not (abs(z1) < 1.0 and abs(z2) < 1.0):
        raise DomainViolation(f"points must lie in the open unit disc: {z1}, {z2}")
    # sinh(d/2) = |z1 - z2| / sqrt((1 - |z1|^2)(1 - |z2|^2)); no cancellation for far-apart points
    r1, r2 = abs(z1), abs(z2)
    gap = (1.0 - r1) * (1.0 + r1) * (1.0 - r2) * (1.0 + r2)
    return 2.0 * math.asinh(abs(z1 - z2) / math.sqrt(gap))


def dist_halfplane(model, z1, z2):
    """Hyperbolic distance in a half-plane (density 1 / distance to the edge)."""
    w1 = model.normal_coordinate(complex(z1))
    w2 = model.normal_coordinate(complex(z2))
    if not (w1.real > 0.0 and w2.real > 0.0):
        raise DomainViolation(f"points must lie inside the half-plane: {z1}, {z2}")
    return 2.0 * math.asinh(abs(w1 - w2) / (2.0 * math.sqrt(w1.real * w2.real)))


def cayley(w):
    """Right half-plane -> unit disc, ``w -> (w - 1)/(w + 1)``."""
    return (w - 1.0) / (w + 1.0)


@dataclass
class QuadratureResult:
    value: float
    error: float
    evaluations: int


def dist_domain_upper(dist_to_boundary, z1, z2, tol=1e-9, max_evals=2 ** 14):
    """Upper bound for rho_U(z1, z2): integral of ``2 / dist`` along the segment.

    ``dist_to_boundary`` must return positive lower bounds for the Euclidean
    distance to the boundary of U.  Adaptive Simpson with an evaluation cap.
    """
    z1, z2 = complex(z1), complex(z2)
    length = abs(z2 - z1)
    if length == 0.0:
        return QuadratureResult(0.0, 0.0, 0)
    count = 0

    def f(t):
        nonlocal count
        count += 1
        d = dist_to_boundary(z1 + t * (z2 - z1))
        if not d > 0:
            raise SegmentLeavesDomain(f"non-positive boundary distance at t={t:.6g}")
        return 2.0 * length / d

    fa, fm, fb = f(0.0), f(0.5), f(1.0)
    whole = (fa + 4 * fm + fb) / 6.0
    total, err = 0.0, 0.0
    # explicit stack: (a, b, fa, fm, fb, whole, tol)
    stack = [(0.0, 1.0, fa, fm, fb, whole, tol)]
    while stack:
        a, b, fa, fm, fb, whole, eps = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4 * flm + fm) / 6.0
        right = (b - m) * (fm + 4 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15 * eps or count >= max_evals or b - a < 1e-12:
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            stack.append((m, b, fm, frm, fb, right, eps / 2))
            stack.append((a, m, fa, flm, fm, left, eps / 2))
    return QuadratureResult(total, err, count)


@dataclass
class StepSequence:
    d: np.ndarray
    metric: object
    n_offset: int = 0
    is_upper_bound: bool = False
    points: np.ndarray | None = None
    gaps: np.ndarray | None = None  # 1 - |z_n| for disc orbits
    increments: np.ndarray | None = None  # |z_{n+1} - z_n|
    notes: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.d)

    @property
    def n(self):
        return np.arange(self.n_offset, self.n_offset + len(self.d))

    def rows(self):
        return [(int(n), float(d), float(n * d)) for n, d in zip(self.n, self.d)]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# n: iterate index; d_n: hyperbolic distance between iterates n+1 and n;"
                     " n*d_n: scaled step\n")
            writer = csv.writer(fh)
            writer.writerow(["n", "d_n", "n*d_n"])
            for row in self.rows():
                writer.writerow([row[0], repr(row[1]), repr(row[2])])

    def to_json(self, head=5):
        d = self.d
        return {"length": len(d), "n_offset": self.n_offset, "metric": self.metric.to_json(),
                "is_upper_bound": self.is_upper_bound, "first": [float(x) for x in d[:head]],
                "last": [float(x) for x in d[-head:]], "notes": self.notes}


def _orbit_points(spec, z0, n):
    orbit = iterate(spec, z0, n, rel_error_threshold=None)
    if orbit.termination is Termination.POLE:
        raise PoleSignal(0.0, orbit.index)
    if orbit.termination is Termination.OVERFLOW:
        raise OverflowSignal(orbit.index)
    return np.array(orbit.points)


def step_sequence(spec, z0, metric, n):
    """``d[k] = distance(f^{k+1}(z0), f^k(z0))`` for ``k = 0..n-1`` in ``metric``.

    For inner maps on the disc the orbit is tracked relative to the
    Denjoy-Wolff point, so it can be followed to ``1 - |z| ~ 1e-280``; if it
    gets there first the sequence is shorter than ``n`` and
    ``notes['truncated']`` is set.
    """
    if isinstance(metric, Disc):
        if spec.is_inner:
            b = spec.blaschke
            try:
                fp = bl.locate_denjoy_wolff(b, complex(z0))
            except (InteriorFixedPoint, NoConvergence):
                fp = None
            if fp is not None:
                if not abs(complex(z0)) < 1.0:
                    raise OrbitLeftDomain(0, z0)
                orbit = bl.track_orbit(b, fp.point, complex(z0), n)
                d = orbit.step_distances()
                return StepSequence(d, metric, points=orbit.z, gaps=orbit.one_minus_abs,
                                    increments=np.abs(np.diff(orbit.zeta)),
                                    notes={"truncated": orbit.truncated, "tracking": "boundary-relative",
                                           "denjoy_wolff_theta": fp.theta})
        pts = _orbit_points(spec, z0, n)
        bad = np.nonzero(~(np.abs(pts) < 1.0))[0]
        if len(bad):
            raise OrbitLeftDomain(int(bad[0]), complex(pts[bad[0]]))
        d = np.array([dist_disc(pts[k + 1], pts[k]) for k in range(n)])
        return StepSequence(d, metric, points=pts)

    if isinstance(metric, HalfPlane):
        pts = _orbit_points(spec, z0, n)
        w = pts * metric.direction.conjugate() - metric.offset
        bad = np.nonzero(~(w.real > 0.0))[0]
        if len(bad):
            raise OrbitLeftDomain(int(bad[0]), complex(pts[bad[0]]))
        d = 2.0 * np.arcsinh(np.abs(np.diff(w)) / (2.0 * np.sqrt(w.real[:-1] * w.real[1:])))
        return StepSequence(d, metric, is_upper_bound=metric.bound_only, points=pts)

    if isinstance(metric, DomainUpperBound):
        pts = _orbit_points(spec, z0, n)
        d = np.empty(n)
        err = 0.0
        for k in range(n):
            try:
                q = dist_domain_upper(metric.dist_to_boundary, pts[k], pts[k + 1])
            except SegmentLeavesDomain:
                raise OrbitLeftDomain(k, complex(pts[k])) from None
            d[k] = q.value
            err = max(err, q.error)
        return StepSequence(d, metric, is_upper_bound=True, points=pts,
                            notes={"max_quadrature_error": err})
    raise TypeError(f"unsupported metric model {metric!r}")


def metric_from_hint(hint):
    return HalfPlane(hint.direction, hint.offset, bound_only=not hint.exact)
