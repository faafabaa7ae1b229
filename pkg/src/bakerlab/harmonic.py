"""Harmonic-measure boundary sampling and boundary-orbit fate experiments.

Model domains (disc, half-plane) use their exact first-exit laws.  A genuine
Baker domain is described by an ``OracleDomain``: a point belongs to it when
its orbit reaches a forward-invariant entry region, and walk-on-spheres uses
ray searches against that oracle to estimate the distance to the boundary.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
import csv
import math

import numpy as np

from . import maps
from .errors import DomainViolation, StuckWalk
from .hyperbolic import HalfPlane
from .parallel import chunk_ranges, map_chunks, sample_rng

TWO_PI = 2.0 * math.pi
FATE_CHUNK = 256
WALK_CHUNK = 16


# -- regions ----------------------------------------------------------------

@dataclass(frozen=True)
class UnitDisc:
    kind = "disc"

    def contains(self, z):
        return np.abs(z) < 1.0

    def to_json(self):
        return {"kind": "disc"}


@dataclass(frozen=True)
class Strip:
    """``{Re z > re_min, |Im z - center| < half_width}``."""

    re_min: float
    half_width: float
    center: float = 0.0

    def contains(self, z):
        z = np.asarray(z)
        return (np.real(z) > self.re_min) & (np.abs(np.imag(z) - self.center) < self.half_width)

    def to_json(self):
        return {"kind": "strip", "re_min": self.re_min, "half_width": self.half_width,
                "center": self.center}


@dataclass(frozen=True)
class Box:
    """Closed target box; ``Box.interval`` gives a segment of the real axis."""

    re_min: float
    re_max: float
    im_min: float = 0.0
    im_max: float = 0.0

    def contains(self, z):
        re, im = np.real(z), np.imag(z)
        return (re >= self.re_min) & (re <= self.re_max) & (im >= self.im_min) & (im <= self.im_max)

    @classmethod
    def interval(cls, lo, hi):
        return cls(lo, hi, 0.0, 0.0)

    def to_json(self):
        return {"kind": "box", "re": [self.re_min, self.re_max], "im": [self.im_min, self.im_max]}


def _region_contains(region, z):
    if isinstance(region, HalfPlane):
        z = np.asarray(z)
        return (z * region.direction.conjugate()).real - region.offset > 0.0
    return region.contains(z)


def _region_json(region):
    return region.to_json()


@dataclass(frozen=True)
class OracleDomain:
    """Baker domain known through an absorbing entry region.

    ``exclusions`` are regions known to lie outside U (another Baker domain,
    for instance); entering one settles NotInU.
    """

    spec: object
    entry: object
    budget: int = 200
    big_radius: float = 1e8
    exclusions: tuple = ()

    def to_json(self):
        return {"kind": "oracle", "map": self.spec.name, "entry": _region_json(self.entry),
                "budget": self.budget, "big_radius": self.big_radius,
                "exclusions": [_region_json(r) for r in self.exclusions]}


class Membership(str, Enum):
    IN = "InU"
    OUT = "NotInU"
    UNKNOWN = "Unknown"


_IN, _OUT, _UNKNOWN, _ACTIVE = 1, 0, 2, 3


def membership_array(domain, z):
    """Vectorised oracle: codes 1 InU, 0 NotInU, 2 Unknown."""
    z = np.array(z, dtype=complex, copy=True).ravel()
    state = np.full(z.shape, _ACTIVE, dtype=np.int8)
    for k in range(domain.budget + 1):
        act = state == _ACTIVE
        if not act.any():
            break
        za = z[act]
        code = np.full(za.shape, _ACTIVE, dtype=np.int8)
        code[~np.isfinite(za)] = _OUT
        for region in domain.exclusions:
            code[(code == _ACTIVE) & _region_contains(region, za)] = _OUT
        code[(code == _ACTIVE) & _region_contains(domain.entry, za)] = _IN
        code[(code == _ACTIVE) & (np.abs(za) > domain.big_radius)] = _OUT
        if k < domain.budget:
            still = code == _ACTIVE
            w, pole = maps.evaluate_array(domain.spec, za[still])
            sub = code[still]
            sub[pole | ~np.isfinite(w)] = _OUT
            code[still] = sub
            za = za.copy()
            za[still] = w
            z[act] = za
        state[act] = code
    state[state == _ACTIVE] = _UNKNOWN
    return state


def membership(domain, z):
    code = int(membership_array(domain, [z])[0])
    return {_IN: Membership.IN, _OUT: Membership.OUT}.get(code, Membership.UNKNOWN)


def _sample_region(region, rng, span=50.0):
    depth = 10.0 ** rng.uniform(-6.0, math.log10(span))
    if isinstance(region, HalfPlane):
        return (region.offset + depth + 1j * rng.uniform(-span, span)) * region.direction
    if isinstance(region, Strip):
        return complex(region.re_min + depth,
                       region.center + region.half_width * rng.uniform(-1.0, 1.0) * (1 - 1e-12))
    raise TypeError(f"cannot sample region {region!r}")


def membership_sensitivity(domain, points, factor=2):
    """How oracle verdicts on ``points`` change when the iteration budget grows by ``factor``."""
    pts = np.asarray(points, dtype=complex)
    pts = pts[np.isfinite(pts)]
    base = membership_array(domain, pts)
    longer = membership_array(replace(domain, budget=domain.budget * factor), pts)
    names = {_IN: Membership.IN.value, _OUT: Membership.OUT.value, _UNKNOWN: Membership.UNKNOWN.value}

    def tally(codes):
        return {name: int(np.sum(codes == code)) for code, name in names.items()}

    return {"budget": domain.budget, "budget_extended": domain.budget * factor,
            "at_budget": tally(base), "at_extended": tally(longer), "changed": int(np.sum(base != longer))}


def validate_entry(domain, n_samples=512, seed=0):
    """Check on seeded samples that the entry region is mapped into itself."""
    for i in range(n_samples):
        z = _sample_region(domain.entry, sample_rng(seed, i))
        w, pole = maps.evaluate_array(domain.spec, np.array([z]))
        if pole[0] or not bool(_region_contains(domain.entry, w)[0]):
            raise DomainViolation(f"entry region not forward-invariant at {z}: image {w[0]}")
    return True


# -- harmonic sampling ------------------------------------------------------

@dataclass
class HarmonicSample:
    boundary_point: complex
    walk_steps: int
    terminal_radius: float

    def to_json(self):
        return {"boundary_point": [self.boundary_point.real, self.boundary_point.imag],
                "walk_steps": self.walk_steps, "terminal_radius": self.terminal_radius}


def disc_exit_point(basepoint, u):
    """Exit point of Brownian motion from ``basepoint`` in the unit disc for ``u ~ U[0,1)``."""
    e = np.exp(TWO_PI * 1j * np.asarray(u))
    return (e + basepoint) / (1.0 + np.conj(basepoint) * e)


def halfplane_exit_point(model, basepoint, u):
    """Exit point on the edge of a half-plane: Cauchy law centred at the foot point."""
    w = complex(basepoint) * model.direction.conjugate() - model.offset
    if not w.real > 0:
        raise DomainViolation(f"basepoint {basepoint} is not inside the half-plane")
    y = w.imag + w.real * np.tan(math.pi * (np.asarray(u) - 0.5))
    return (model.offset + 1j * y) * model.direction


def _ray_directions(rays):
    return np.exp(TWO_PI * 1j * np.arange(rays) / rays)


def oracle_radius(domain, z, hint=1.0, rays=16, bisections=4, floor=1e-300, r_max=None):
    """Conservative distance to the boundary: half the nearest ray hit.

    Each ray is marched outward by doubling until the oracle stops answering
    InU, then the crossing is refined by bisection.
    """
    r_max = domain.big_radius if r_max is None else r_max
    dirs = _ray_directions(rays)
    t_in = np.zeros(rays)
    t_out = np.full(rays, np.inf)
    t = max(hint, floor)
    while t > floor:
        code = membership_array(domain, z + t * dirs)
        bad = code != _IN
        if bad.any():
            t_out = np.where(bad, t, t_out)
            break
        t_in[:] = t
        t *= 2.0
        if t > r_max:
            return 0.5 * r_max
    if t_in.max() == 0.0:
        # the first probe already failed: shrink towards z
        while True:
            t *= 0.5
            if t <= floor:
                return 0.0
            code = membership_array(domain, z + t * dirs)
            good = code == _IN
            t_out = np.where(~good, t, t_out)
            if good.all():
                t_in[:] = t
                break
    # march the rays that have not failed yet
    pending = ~np.isfinite(t_out)
    s = t
    while pending.any():
        s *= 2.0
        if s > r_max:
            t_out[pending] = r_max
            break
        code = membership_array(domain, z + s * dirs[pending])
        idx = np.nonzero(pending)[0]
        fail = code != _IN
        t_out[idx[fail]] = s
        t_in[idx[~fail]] = s
        pending[idx[fail]] = False
        if np.min(t_out) < s:
            break  # further rays cannot lower the minimum
    t_out = np.where(np.isfinite(t_out), t_out, r_max)
    for _ in range(bisections):
        mid = 0.5 * (t_in + t_out)
        code = membership_array(domain, z + mid * dirs)
        ok = code == _IN
        t_in = np.where(ok, mid, t_in)
        t_out = np.where(ok, t_out, mid)
    return 0.5 * float(np.min(t_out))


def walk_on_spheres(radius_fn, basepoint, eps_boundary, rng, max_steps=10 ** 6):
    """Jump uniformly on the largest safe circle until it shrinks below ``eps_boundary``."""
    z = complex(basepoint)
    r = radius_fn(z, 1.0)
    steps = 0
    while r >= eps_boundary:
        if steps >= max_steps:
            raise StuckWalk(f"walk exceeded {max_steps} steps near {z}")
        z = z + r * complex(np.exp(TWO_PI * 1j * rng.random()))
        steps += 1
        r = radius_fn(z, r)
    return HarmonicSample(z, steps, r)


def wos_sample(domain, basepoint, eps_boundary=1e-9, rng=None, seed=None, index=0, method="exact"):
    """One harmonic-measure boundary sample seen from ``basepoint``.

    Disc and half-plane use their closed-form exit laws unless
    ``method="walk"``; oracle domains always walk.
    """
    if rng is None:
        rng = sample_rng(0 if seed is None else seed, index)
    if isinstance(domain, UnitDisc):
        if not abs(basepoint) < 1:
            raise DomainViolation("basepoint must lie in the unit disc")
        if method == "exact":
            return HarmonicSample(complex(disc_exit_point(complex(basepoint), rng.random())), 0, 0.0)
        s = walk_on_spheres(lambda z, h: 1.0 - abs(z), basepoint, eps_boundary, rng)
        return HarmonicSample(s.boundary_point / abs(s.boundary_point), s.walk_steps, s.terminal_radius)
    if isinstance(domain, HalfPlane):
        if method == "exact":
            return HarmonicSample(complex(halfplane_exit_point(domain, basepoint, rng.random())), 0, 0.0)
        s = walk_on_spheres(lambda z, h: domain.boundary_distance(z), basepoint, eps_boundary, rng)
        w = s.boundary_point * domain.direction.conjugate()
        foot = (domain.offset + 1j * w.imag) * domain.direction
        return HarmonicSample(foot, s.walk_steps, s.terminal_radius)
    if isinstance(domain, OracleDomain):
        if membership(domain, basepoint) is not Membership.IN:
            raise DomainViolation(f"basepoint {basepoint} is not in the domain")
        return walk_on_spheres(lambda z, h: oracle_radius(domain, z, hint=h), basepoint,
                               eps_boundary, rng)
    raise TypeError(f"unsupported domain {domain!r}")


# -- boundary fates ---------------------------------------------------------

class Fate(str, Enum):
    ESCAPING = "Escaping"
    RECURRENT = "Recurrent"
    POLE_HIT = "PoleHit"
    UNDEFINED = "Undefined"


_F_ACTIVE, _F_ESC, _F_REC, _F_POLE, _F_UNDEF = 0, 1, 2, 3, 4
_FATE_NAMES = {_F_ESC: Fate.ESCAPING, _F_REC: Fate.RECURRENT, _F_POLE: Fate.POLE_HIT,
               _F_UNDEF: Fate.UNDEFINED}


@dataclass
class FateBatch:
    fate: np.ndarray
    returns: np.ndarray
    steps: np.ndarray
    precision_lost: np.ndarray


def fate_batch(spec, x0, iter_budget, escape_radius, target, min_returns, window=3,
               strict_precision=False):
    """Vectorised boundary fates for an array of starting points.

    ``precision_lost`` marks orbits whose derivative product exceeded the
    double-precision budget; with ``strict_precision`` they count as Undefined.
    """
    z = np.array(x0, copy=True)
    n = len(z)
    fate = np.full(n, _F_ACTIVE, dtype=np.int8)
    returns = np.zeros(n, dtype=np.int64)
    run = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    lyap = np.zeros(n)
    lyap_budget = 15 * math.log(10.0)
    idx = np.arange(n)
    za = z
    ret_a, run_a, lyap_a = returns, run, lyap
    for k in range(1, iter_budget + 1):
        if len(idx) == 0:
            break
        w, pole = maps.evaluate_array(spec, za)
        with np.errstate(divide="ignore"):
            lyap_a = lyap_a + np.log(maps.derivative_array(spec, za, w))
        bad = ~np.isfinite(w) & ~pole
        ret_a = ret_a + target.contains(w)
        run_a = np.where(np.abs(w) > escape_radius, run_a + 1, 0)
        code = np.full(len(idx), _F_ACTIVE, dtype=np.int8)
        code[ret_a >= min_returns] = _F_REC
        code[(code == _F_ACTIVE) & (run_a >= window)] = _F_ESC
        code[pole] = _F_POLE
        code[bad] = _F_UNDEF
        done = code != _F_ACTIVE
        if done.any():
            d_idx = idx[done]
            fate[d_idx] = code[done]
            returns[d_idx] = ret_a[done]
            steps[d_idx] = k
            lyap[d_idx] = lyap_a[done]
            keep = ~done
            idx, za, ret_a, run_a, lyap_a = idx[keep], w[keep], ret_a[keep], run_a[keep], lyap_a[keep]
        else:
            za = w
    if len(idx):
        fate[idx] = _F_UNDEF
        returns[idx] = ret_a
        steps[idx] = iter_budget
        lyap[idx] = lyap_a
    lost = lyap > lyap_budget
    if strict_precision:
        fate[lost & (fate != _F_POLE)] = _F_UNDEF
    return FateBatch(fate, returns, steps, lost)


def boundary_fate(spec, x0, iter_budget, escape_radius, target, min_returns, window=3,
                  strict_precision=False):
    """Fate of a single boundary point and its number of target visits."""
    x = np.array([x0], dtype=float if np.isrealobj(x0) and spec.real_coefficients else complex)
    b = fate_batch(spec, x, iter_budget, escape_radius, target, min_returns, window, strict_precision)
    return _FATE_NAMES[int(b.fate[0])], int(b.returns[0])


@dataclass
class FateReport:
    n_samples: int
    counts: dict
    parameters: dict
    seed: int
    rows: list = field(default_factory=list)
    precision_lost: int = 0
    sampling: str = ""
    membership_sensitivity: dict | None = None

    @property
    def escaping(self):
        return self.counts[Fate.ESCAPING.value]

    @property
    def recurrent(self):
        return self.counts[Fate.RECURRENT.value]

    def fraction(self, fate):
        return self.counts[Fate(fate).value] / self.n_samples if self.n_samples else 0.0

    def to_json(self):
        return {"n_samples": self.n_samples, "escaping": self.counts["Escaping"],
                "recurrent": self.counts["Recurrent"], "pole_hit": self.counts["PoleHit"],
                "undefined": self.counts["Undefined"],
                "fractions": {k: v / self.n_samples if self.n_samples else 0.0
                              for k, v in self.counts.items()},
                "precision_lost": self.precision_lost, "sampling": self.sampling,
                "parameters": self.parameters, "seed": self.seed,
                "membership_sensitivity": self.membership_sensitivity}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("# sample_id; boundary_point re/im; fate; returns: target visits;"
                     " steps: iterations used\n")
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "boundary_re", "boundary_im", "fate", "returns", "steps"])
            for row in self.rows:
                writer.writerow(row)


def sample_boundary(domain, basepoint, n_samples, seed, eps_boundary=1e-9, threads=1):
    """Harmonic-measure samples with one RNG stream per sample index."""
    if isinstance(domain, UnitDisc):
        u = np.array([sample_rng(seed, i).random() for i in range(n_samples)])
        return disc_exit_point(complex(basepoint), u), "exact-disc"
    if isinstance(domain, HalfPlane):
        u = np.array([sample_rng(seed, i).random() for i in range(n_samples)])
        return np.asarray(halfplane_exit_point(domain, basepoint, u)), "exact-halfplane"

    def work(r):
        out = []
        for i in range(r[0], r[1]):
            try:
                out.append(wos_sample(domain, basepoint, eps_boundary, rng=sample_rng(seed, i)).boundary_point)
            except StuckWalk:
                out.append(complex(math.nan, math.nan))
        return out

    parts = map_chunks(work, chunk_ranges(n_samples, WALK_CHUNK), threads)
    return np.array([p for part in parts for p in part], dtype=complex), "walk-on-spheres"


def dichotomy_experiment(spec, domain, basepoint, n_samples, iter_budget, seed,
                         escape_radius=1e10, target=None, min_returns=10, eps_boundary=1e-9,
                         window=3, threads=1, strict_precision=False):
    """Sample boundary points by harmonic measure and tally their fates."""
    if isinstance(domain, OracleDomain):
        validate_entry(domain, seed=seed)
    if target is None:
        target = Box(-1.0, 1.0, -1.0, 1.0)
    pts, how = sample_boundary(domain, basepoint, n_samples, seed, eps_boundary, threads)
    pts = np.asarray(pts, dtype=complex)
    real_line = spec.real_coefficients and np.all(np.imag(pts[np.isfinite(pts)]) == 0.0)
    start = np.real(pts) if real_line else pts
    bad = ~np.isfinite(pts)

    def work(r):
        return fate_batch(spec, start[r[0]:r[1]], iter_budget, escape_radius, target, min_returns,
                          window, strict_precision)

    parts = map_chunks(work, chunk_ranges(n_samples, FATE_CHUNK), threads)
    if parts:
        fate = np.concatenate([p.fate for p in parts])
        returns = np.concatenate([p.returns for p in parts])
        steps = np.concatenate([p.steps for p in parts])
        lost = np.concatenate([p.precision_lost for p in parts])
    else:
        fate = returns = steps = lost = np.zeros(0, dtype=np.int64)
    fate[bad] = _F_UNDEF
    counts = {f.value: int(np.sum(fate == code)) for code, f in _FATE_NAMES.items()}
    counts = {Fate.ESCAPING.value: counts["Escaping"], Fate.RECURRENT.value: counts["Recurrent"],
              Fate.POLE_HIT.value: counts["PoleHit"], Fate.UNDEFINED.value: counts["Undefined"]}
    rows = [(i, repr(float(pts[i].real)), repr(float(pts[i].imag)), _FATE_NAMES[int(fate[i])].value,
             int(returns[i]), int(steps[i])) for i in range(n_samples)]
    params = {"iter_budget": iter_budget, "escape_radius": escape_radius, "return_window": window,
              "min_returns": min_returns, "target_set": target.to_json(),
              "eps_boundary": eps_boundary, "strict_precision": strict_precision,
              "domain": domain.to_json(), "basepoint": [complex(basepoint).real, complex(basepoint).imag]}
    sens = membership_sensitivity(domain, pts) if isinstance(domain, OracleDomain) else None
    return FateReport(n_samples, counts, params, seed, rows, int(np.sum(lost)), how, sens)
