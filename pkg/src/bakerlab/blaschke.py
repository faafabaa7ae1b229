"""Finite Blaschke products ``B(z) = rotation * prod (z - a) / (1 - conj(a) z)``.

Besides evaluation this module carries the pieces that need care near the
unit circle:

* the continuous lift ``Theta`` of ``theta -> arg B(e^{i theta})``, which is
  strictly increasing of total variation ``2 pi d``;
* boundary fixed points located from ``Theta(theta) - theta``;
* an orbit tracker that keeps ``p - z`` and ``1 - |z|^2`` with relative
  accuracy, so that orbits converging to a boundary point ``p`` can be followed
  long after ``z`` itself rounds to ``p`` in double precision.
"""
from dataclasses import dataclass
import cmath
import math

import numpy as np

from .errors import InteriorFixedPoint, NoConvergence

TWO_PI = 2.0 * math.pi


class Blaschke:
    def __init__(self, zeros, rotation=1.0 + 0.0j):
        self.zeros = tuple(complex(a) for a in zeros)
        self.rotation = complex(rotation)
        self._arg_rotation = cmath.phase(self.rotation)
        self._weights = tuple(1.0 - abs(a) ** 2 for a in self.zeros)

    @property
    def degree(self):
        return len(self.zeros)

    def __repr__(self):
        return f"Blaschke(zeros={self.zeros}, rotation={self.rotation})"

    def __call__(self, z):
        out = self.rotation
        for a in self.zeros:
            out = out * (z - a) / (1.0 - a.conjugate() * z)
        return out

    def log_derivative(self, z):
        """B'/B = sum (1 - |a|^2) / ((z - a)(1 - conj(a) z))."""
        return sum(w / ((z - a) * (1.0 - a.conjugate() * z))
                   for a, w in zip(self.zeros, self._weights))

    def derivative(self, z):
        return self(z) * self.log_derivative(z)

    def second_derivative(self, z):
        ld = self.log_derivative(z)
        dld = sum(-1.0 / (z - a) ** 2 + a.conjugate() ** 2 / (1.0 - a.conjugate() * z) ** 2
                  for a in self.zeros)
        return self(z) * (ld * ld + dld)

    def poles(self):
        return [1.0 / a.conjugate() for a in self.zeros if a != 0]

    # -- circle map -------------------------------------------------------
    def lift(self, theta):
        """Continuous, increasing lift of ``arg B(e^{i theta})``."""
        th = np.asarray(theta, dtype=float)
        e = np.exp(-1j * th)
        out = self._arg_rotation + self.degree * th
        for a in self.zeros:
            out = out + 2.0 * np.angle(1.0 - a * e)
        return out if out.ndim else float(out)

    def lift_derivative(self, theta):
        """|B'(e^{i theta})| = sum (1 - |a|^2) / |e^{i theta} - a|^2."""
        th = np.asarray(theta, dtype=float)
        w = np.exp(1j * th)
        out = np.zeros_like(th)
        for a, wt in zip(self.zeros, self._weights):
            out = out + wt / np.abs(w - a) ** 2
        return out if out.ndim else float(out)

    def lift_second_derivative(self, theta):
        th = np.asarray(theta, dtype=float)
        w = np.exp(1j * th)
        out = np.zeros_like(th)
        for a, wt in zip(self.zeros, self._weights):
            out = out - 2.0 * wt * np.imag(np.conj(a) * w) / np.abs(w - a) ** 4
        return out if out.ndim else float(out)

    def circle_map(self, theta):
        """Angle of ``B(e^{i theta})`` in [0, 2 pi)."""
        t = np.mod(self.lift(theta), TWO_PI)
        return np.where(t >= TWO_PI, 0.0, t) if np.ndim(t) else (0.0 if t >= TWO_PI else float(t))

    def fixed_point_polynomial(self):
        """Coefficients (highest first) of rotation*prod(z-a) - z*prod(1-conj(a)z)."""
        num = np.array([1.0 + 0j])
        den = np.array([1.0 + 0j])
        for a in self.zeros:
            num = np.convolve(num, [1.0, -a])
            den = np.convolve(den, [-a.conjugate(), 1.0])
        num = self.rotation * num
        den = np.convolve(den, [1.0, 0.0])
        num = np.concatenate([np.zeros(len(den) - len(num), complex), num])
        return num - den


def interior_fixed_points(blaschke, tol=1e-9):
    coeffs = np.trim_zeros(blaschke.fixed_point_polynomial(), "f")
    if len(coeffs) < 2:
        return []
    roots = np.roots(coeffs)
    found = []
    for r in roots:
        if abs(r) >= 1.0 - tol:
            continue
        if abs(r) > 1.0 - 1e-3:
            # multiple boundary roots scatter off the circle by ~eps**(1/m)
            fp = polish_boundary_fixed_point(blaschke, cmath.phase(r))
            if fp.residual < 1e-12 and abs(fp.point - r) < 1e-3:
                continue
        found.append(complex(r))
    return found


@dataclass(frozen=True)
class BoundaryFixedPoint:
    theta: float
    point: complex
    order: int  # 1 simple, 2 double, 3 triple root of Theta(t) - t
    residual: float


def _wrap(x):
    """Representative of x modulo 2 pi in (-pi, pi]."""
    return x - TWO_PI * math.floor((x + math.pi) / TWO_PI)


def polish_boundary_fixed_point(blaschke, theta0, deriv_tol=1e-6, max_iter=200):
    """Refine an approximate boundary fixed point by Newton steps.

    Multiple roots of ``G(t) = Theta(t) - t`` are ill-conditioned, so once a
    Newton pass on ``G`` lands where ``G'`` (then ``G''``) is also tiny, the
    point is re-polished as a simple root of that derivative instead.
    """
    def newton(t, f):
        for _ in range(max_iter):
            val, slope = f(t)
            if slope == 0.0:
                break
            step = max(-0.1, min(0.1, val / slope))
            t -= step
            if abs(step) < 1e-17:
                break
        return t

    def g0(x):
        return _wrap(blaschke.lift(x) - x), blaschke.lift_derivative(x) - 1.0

    def g1(x):
        return blaschke.lift_derivative(x) - 1.0, blaschke.lift_second_derivative(x)

    def g2(x):
        h = 1e-5
        d = (blaschke.lift_second_derivative(x + h) - blaschke.lift_second_derivative(x - h)) / (2 * h)
        return blaschke.lift_second_derivative(x), d

    t = float(theta0)
    if abs(blaschke.lift_derivative(t) - 1.0) >= deriv_tol:
        t = newton(t, g0)
    order = 1
    if abs(blaschke.lift_derivative(t) - 1.0) < deriv_tol:
        t = newton(t, g1)
        order = 2
        if abs(blaschke.lift_second_derivative(t)) < deriv_tol:
            t = newton(t, g2)
            order = 3
    t = math.remainder(t, TWO_PI)
    residual = abs(_wrap(blaschke.lift(t) - t))
    return BoundaryFixedPoint(theta=t, point=cmath.exp(1j * t), order=order, residual=residual)


def locate_denjoy_wolff(blaschke, w0=0.0j, n_iter=10000, interior_tol=1e-9):
    """Iterate from ``w0`` and return the polished boundary attracting point.

    Raises InteriorFixedPoint if the fixed-point polynomial has a root inside
    the disc (then the Denjoy-Wolff point is interior).
    """
    inner = interior_fixed_points(blaschke, tol=interior_tol)
    if inner:
        raise InteriorFixedPoint(inner[0])
    z = complex(w0)
    for _ in range(n_iter):
        z = blaschke(z)
        if abs(z) > 1.0 - 1e-13:
            break
    if z == 0:
        raise NoConvergence("orbit did not move away from the origin")
    fp = polish_boundary_fixed_point(blaschke, cmath.phase(z))
    if fp.residual > 1e-8:
        raise NoConvergence(f"boundary fixed point residual {fp.residual:.3g} near angle {cmath.phase(z):.6g}")
    return fp


@dataclass
class DiscOrbit:
    """Orbit in boundary-relative form: ``z = p - zeta``, ``delta = 1 - |z|^2``."""

    p: complex
    z: np.ndarray
    zeta: np.ndarray
    delta: np.ndarray
    truncated: bool = False

    @property
    def one_minus_abs(self):
        return self.delta / (1.0 + np.abs(self.z))

    def step_distances(self):
        """Hyperbolic distances between consecutive points (density 2/(1-|z|^2))."""
        dz = np.abs(np.diff(self.zeta))
        root = np.sqrt(self.delta)  # product of square roots: delta alone may reach 1e-280
        return 2.0 * np.arcsinh(dz / root[:-1] / root[1:])


def track_orbit(blaschke, p, w0, n_steps, delta_floor=1e-280):
    """Follow ``n_steps`` iterates of ``w0`` relative to the boundary fixed point ``p``.

    Uses the exact identities
    ``b_a(p) - b_a(z) = (p - z)(1 - |a|^2) / ((1 - conj(a) p)(1 - conj(a) z))`` and
    ``1 - |b_a(z)|^2 = (1 - |a|^2)(1 - |z|^2) / |1 - conj(a) z|^2``,
    treating ``B(p) = p`` as exact.  Stops early (``truncated``) when
    ``1 - |z|^2`` falls below ``delta_floor``.
    """
    zeros = blaschke.zeros
    weights = blaschke._weights
    rot = blaschke.rotation
    bp = [(p - a) / (1.0 - a.conjugate() * p) for a in zeros]
    suffix = [1.0 + 0j] * (len(zeros) + 1)
    for k in range(len(zeros) - 1, -1, -1):
        suffix[k] = suffix[k + 1] * bp[k]
    den_p = [1.0 - a.conjugate() * p for a in zeros]

    z = complex(w0)
    zeta = p - z
    delta = 1.0 - abs(z) ** 2
    zs, zetas, deltas = [z], [zeta], [delta]
    truncated = False
    for _ in range(n_steps):
        prefix = 1.0 + 0j
        diff = 0.0j
        log_keep = 0.0
        for k, a in enumerate(zeros):
            den_z = 1.0 - a.conjugate() * z
            diff += prefix * (zeta * weights[k] / (den_p[k] * den_z)) * suffix[k + 1]
            prefix = prefix * (z - a) / den_z
            eps_k = weights[k] * delta / abs(den_z) ** 2
            log_keep += math.log1p(-min(eps_k, 1.0))
        zeta = rot * diff
        delta = -math.expm1(log_keep)
        z = p - zeta
        if not delta > delta_floor:
            truncated = True
            break
        zs.append(z)
        zetas.append(zeta)
        deltas.append(delta)
    return DiscOrbit(p=p, z=np.array(zs), zeta=np.array(zetas), delta=np.array(deltas),
                     truncated=truncated)
