"""Registry and evaluation of the plane maps and inner functions.

Every map is identified by a stable registry name (used by the CLI config
schema) and a small parameter dictionary.  Evaluation raises ``PoleSignal``
near poles and ``OverflowSignal`` when a value leaves the floating range.
"""
from dataclasses import dataclass, field
from enum import Enum
import cmath
import math

import numpy as np

from .blaschke import Blaschke
from .errors import (InvalidParam, OverflowSignal, PoleSignal, TruncationRangeError,
                     UnknownMap)

HALF_PI = 0.5 * math.pi


class MapKind(str, Enum):
    FATOU = "fatou"
    BAKER_DOMINGUEZ = "baker-dominguez"
    TAN = "tan"
    ABSORB = "absorb"
    MANE = "mane"
    MOBIUS = "mobius"
    PARABOLIC_MOBIUS = "parabolic-mobius"
    BLASCHKE = "blaschke"
    AFFINE = "affine"
    DOUBLING = "doubling-exp"


INNER_KINDS = frozenset({MapKind.MOBIUS, MapKind.PARABOLIC_MOBIUS, MapKind.BLASCHKE})
REAL_KINDS = frozenset({MapKind.FATOU, MapKind.BAKER_DOMINGUEZ, MapKind.TAN, MapKind.MANE,
                        MapKind.DOUBLING})


@dataclass(frozen=True)
class HalfPlaneHint:
    """Half-plane ``{Re(z / direction) > offset}`` known to lie in the Baker domain.

    ``exact`` marks the case where the half-plane *is* the domain.
    """

    direction: complex
    offset: float
    exact: bool


@dataclass(frozen=True, eq=False)
class MapSpec:
    kind: MapKind
    params: dict = field(default_factory=dict)
    baker_direction: complex | None = None
    pole_rule: str = "none (entire)"
    formula: str = ""
    provenance: str = ""
    halfplane: HalfPlaneHint | None = None

    @property
    def name(self):
        return self.kind.value

    @property
    def is_inner(self):
        return self.kind in INNER_KINDS

    @property
    def real_coefficients(self):
        if self.kind in REAL_KINDS:
            return True
        if self.kind is MapKind.AFFINE:
            return complex(self.params["lam"]).imag == 0.0
        if self.kind is MapKind.MOBIUS:
            return True
        return False

    @property
    def blaschke(self):
        if not self.is_inner:
            raise TypeError(f"{self.name} is not an inner function")
        cached = self.__dict__.get("_blaschke")
        if cached is None:
            cached = _make_blaschke(self)
            object.__setattr__(self, "_blaschke", cached)
        return cached

    def to_json(self):
        out = {"name": self.name}
        for k, v in self.params.items():
            out[k] = _jsonable(v)
        return out


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def parse_complex(value, field_name="value"):
    """Accept numbers, ``[re, im]`` pairs and strings such as ``"10+0i"``."""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        s = value.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(s)
        except ValueError:
            pass
    raise InvalidParam(field_name, f"cannot parse complex number from {value!r}")


def _make_blaschke(spec):
    if spec.kind is MapKind.MOBIUS:
        # (z + a)/(1 + a z) is the single factor with zero -a
        return Blaschke([-spec.params["a"]], 1.0)
    if spec.kind is MapKind.PARABOLIC_MOBIUS:
        # Cayley conjugate of w -> w + i on the right half-plane, fixing 1
        zero = (1.0 - 2.0j) / 5.0
        unrotated = Blaschke([zero])
        return Blaschke([zero], 1.0 / unrotated(1.0))
    return Blaschke(spec.params["zeros"], spec.params["rotation"])


# -- registry -------------------------------------------------------------

_CATALOG = {
    MapKind.FATOU: ("z+1+e^{-z}", "classical Fatou example; translation direction a=1"),
    MapKind.BAKER_DOMINGUEZ: ("z+e^{-z}", "Newton map of exp(-e^z); degree-2 doubly parabolic Baker domains"),
    MapKind.TAN: ("z+tan z", "invariant upper/lower half-planes; a=+i or -i"),
    MapKind.ABSORB: ("z+i+tan z", "Newton map with a Baker domain containing an upper half-plane; a=2i"),
    MapKind.MANE: ("z-sum_{n<=N} 2z/(z^2-n^delta)", "truncated Doering-Mane series, 1<delta<2"),
    MapKind.MOBIUS: ("(z+a)/(1+az)", "hyperbolic disc automorphism, Denjoy-Wolff point 1"),
    MapKind.PARABOLIC_MOBIUS: ("((2-i)z+i)/((2+i)-iz)", "Cayley conjugate of w->w+i, simply parabolic"),
    MapKind.BLASCHKE: ("rotation*prod (z-a)/(1-conj(a)z)", "finite Blaschke product; default (3z^2+1)/(z^2+3)"),
    MapKind.AFFINE: ("lam*z", "linear model of hyperbolic type"),
    MapKind.DOUBLING: ("2z+e^{-z}", "hyperbolic-regime test map (no literature provenance)"),
}


def _check_keys(params, allowed):
    for key in params:
        if key not in allowed:
            raise InvalidParam(key, f"unknown parameter (allowed: {sorted(allowed)})")


def registry_get(name, params=None):
    """Build a fully populated MapSpec from a registry name and parameters."""
    params = dict(params or {})
    try:
        kind = MapKind(name)
    except ValueError:
        raise UnknownMap(f"unknown map {name!r}; known: {[k.value for k in MapKind]}") from None
    formula, provenance = _CATALOG[kind]
    common = dict(formula=formula, provenance=provenance)

    if kind is MapKind.FATOU:
        _check_keys(params, set())
        return MapSpec(kind, {}, baker_direction=1 + 0j,
                       halfplane=HalfPlaneHint(1 + 0j, 2.0, exact=False), **common)
    if kind is MapKind.BAKER_DOMINGUEZ:
        _check_keys(params, set())
        return MapSpec(kind, {}, **common)
    if kind is MapKind.DOUBLING:
        _check_keys(params, set())
        return MapSpec(kind, {}, halfplane=HalfPlaneHint(1 + 0j, 1.0, exact=False), **common)
    if kind is MapKind.TAN:
        _check_keys(params, {"half_plane"})
        side = params.get("half_plane", "+")
        if side not in ("+", "-"):
            raise InvalidParam("half_plane", "must be '+' or '-'")
        a = 1j if side == "+" else -1j
        return MapSpec(kind, {"half_plane": side}, baker_direction=a,
                       pole_rule="pi/2 + k*pi", halfplane=HalfPlaneHint(a, 0.0, exact=True), **common)
    if kind is MapKind.ABSORB:
        _check_keys(params, set())
        return MapSpec(kind, {}, baker_direction=2j, pole_rule="pi/2 + k*pi",
                       halfplane=HalfPlaneHint(1j, 1.0, exact=False), **common)
    if kind is MapKind.MANE:
        _check_keys(params, {"delta", "terms"})
        delta = float(params.get("delta", 1.5))
        terms = params.get("terms", 1000)
        if not 1.0 < delta < 2.0:
            raise InvalidParam("delta", f"must satisfy 1 < delta < 2, got {delta}")
        if isinstance(terms, bool) or int(terms) != terms or terms < 1:
            raise InvalidParam("terms", f"must be an integer >= 1, got {terms}")
        return MapSpec(kind, {"delta": delta, "terms": int(terms)},
                       pole_rule="z = +-n^(delta/2), n = 0..terms",
                       halfplane=HalfPlaneHint(1j, 0.0, exact=True), **common)
    if kind is MapKind.MOBIUS:
        _check_keys(params, {"a"})
        a = float(params.get("a", 0.5))
        if not 0.0 < a < 1.0:
            raise InvalidParam("a", f"must lie strictly inside (0, 1), got {a}")
        return MapSpec(kind, {"a": a}, pole_rule="z = -1/a", **common)
    if kind is MapKind.PARABOLIC_MOBIUS:
        _check_keys(params, set())
        return MapSpec(kind, {}, pole_rule="z = (2+i)/i", **common)
    if kind is MapKind.BLASCHKE:
        _check_keys(params, {"zeros", "rotation"})
        raw = params.get("zeros", [[0.0, 1 / math.sqrt(3)], [0.0, -1 / math.sqrt(3)]])
        if not isinstance(raw, (list, tuple)) or not raw:
            raise InvalidParam("zeros", "must be a non-empty list")
        zeros = tuple(parse_complex(v, "zeros") for v in raw)
        for a in zeros:
            if not abs(a) < 1.0:
                raise InvalidParam("zeros", f"zero {a} is not strictly inside the unit disc")
        rotation = parse_complex(params.get("rotation", 1.0), "rotation")
        if abs(abs(rotation) - 1.0) > 1e-12:
            raise InvalidParam("rotation", "must have unit modulus")
        return MapSpec(kind, {"zeros": zeros, "rotation": rotation},
                       pole_rule="z = 1/conj(a) for each zero a", **common)
    if kind is MapKind.AFFINE:
        _check_keys(params, {"lam"})
        lam = parse_complex(params.get("lam", 2.0), "lam")
        if lam == 0:
            raise InvalidParam("lam", "must be nonzero")
        hint = HalfPlaneHint(1 + 0j, 0.0, exact=True) if lam.imag == 0 and lam.real > 0 else None
        return MapSpec(kind, {"lam": lam}, halfplane=hint, **common)
    raise UnknownMap(name)  # pragma: no cover


def list_maps():
    """Catalog lines ``name: formula (provenance)`` for every registered kind."""
    return [f"{kind.value}: {formula} ({note})" for kind, (formula, note) in _CATALOG.items()]


# -- evaluation -------------------------------------------------------------

def default_pole_eps(z):
    return 1e-12 * (1.0 + abs(z))


def _tan_pole_distance(z):
    k = round((z.real - HALF_PI) / math.pi)
    return abs(z - (HALF_PI + k * math.pi))


def mane_tail_bound(spec, z):
    """Upper bound for the dropped terms ``sum_{n>N} 2|z| / (n^delta - |z|^2)``.

    Valid when ``(N+1)^delta >= 2|z|^2``: then each term is at most
    ``4|z|/n^delta`` and the sum is below ``4|z| N^(1-delta) / (delta - 1)``.
    """
    delta, terms = spec.params["delta"], spec.params["terms"]
    r = abs(z)
    if 2.0 * r * r > (terms + 1) ** delta:
        raise TruncationRangeError(f"|z|^2={r * r:.4g} exceeds half of (N+1)^delta")
    return 4.0 * r * terms ** (1.0 - delta) / (delta - 1.0)


def _mane_nodes(spec):
    return np.arange(spec.params["terms"] + 1, dtype=float) ** spec.params["delta"]


def evaluate(spec, z, pole_eps=None):
    """Return f(z); raise PoleSignal within ``pole_eps`` of a pole."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise OverflowSignal()
    eps = default_pole_eps(z) if pole_eps is None else pole_eps
    kind = spec.kind
    try:
        if kind is MapKind.FATOU:
            w = z + 1.0 + cmath.exp(-z)
        elif kind is MapKind.BAKER_DOMINGUEZ:
            w = z + cmath.exp(-z)
        elif kind is MapKind.DOUBLING:
            w = 2.0 * z + cmath.exp(-z)
        elif kind in (MapKind.TAN, MapKind.ABSORB):
            d = _tan_pole_distance(z)
            if d < eps:
                raise PoleSignal(d)
            w = z + cmath.tan(z)
            if kind is MapKind.ABSORB:
                w += 1j
        elif kind is MapKind.MANE:
            r2 = abs(z) ** 2
            if 2.0 * r2 > (spec.params["terms"] + 1) ** spec.params["delta"]:
                raise TruncationRangeError(f"|z|^2={r2:.4g} exceeds half of (N+1)^delta")
            den = z * z - _mane_nodes(spec)
            d = np.min(np.abs(den))
            if d < eps:
                raise PoleSignal(d)
            w = z - complex(np.sum(2.0 * z / den))
        elif kind is MapKind.AFFINE:
            w = spec.params["lam"] * z
        else:
            b = spec.blaschke
            for a in b.zeros:
                d = abs(1.0 - a.conjugate() * z)
                if d < eps:
                    raise PoleSignal(d)
            w = b(z)
    except OverflowError:
        raise OverflowSignal() from None
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise OverflowSignal()
    return w


def derivative(spec, z):
    z = complex(z)
    kind = spec.kind
    if kind in (MapKind.FATOU, MapKind.BAKER_DOMINGUEZ):
        return 1.0 - cmath.exp(-z)
    if kind is MapKind.DOUBLING:
        return 2.0 - cmath.exp(-z)
    if kind in (MapKind.TAN, MapKind.ABSORB):
        return 2.0 + cmath.tan(z) ** 2
    if kind is MapKind.MANE:
        c = _mane_nodes(spec)
        return 1.0 + complex(np.sum(2.0 * (z * z + c) / (z * z - c) ** 2))
    if kind is MapKind.AFFINE:
        return spec.params["lam"]
    return spec.blaschke.derivative(z)


def evaluate_array(spec, z, pole_eps_rel=1e-12):
    """Vectorised evaluation; returns ``(values, pole_mask)``.

    Real input stays real for maps with real coefficients (boundary dynamics on
    the real line); pole entries are set to NaN.
    """
    z = np.asarray(z)
    eps = pole_eps_rel * (1.0 + np.abs(z))
    kind = spec.kind
    pole = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if kind is MapKind.FATOU:
            w = z + 1.0 + np.exp(-z)
        elif kind is MapKind.BAKER_DOMINGUEZ:
            w = z + np.exp(-z)
        elif kind is MapKind.DOUBLING:
            w = 2.0 * z + np.exp(-z)
        elif kind in (MapKind.TAN, MapKind.ABSORB):
            r = np.mod(np.real(z) - HALF_PI, math.pi)
            dre = np.minimum(r, math.pi - r)
            pole = np.hypot(dre, np.imag(z)) < eps
            w = z + np.tan(z)
            if kind is MapKind.ABSORB:
                w = w + 1j
        elif kind is MapKind.MANE:
            den = z[..., None] ** 2 - _mane_nodes(spec)
            pole = np.min(np.abs(den), axis=-1) < eps
            w = z - np.sum(2.0 * z[..., None] / den, axis=-1)
        elif kind is MapKind.AFFINE:
            lam = spec.params["lam"]
            w = (lam.real if lam.imag == 0 else lam) * z
        else:
            b = spec.blaschke
            w = np.full(z.shape, b.rotation, dtype=complex)
            for a in b.zeros:
                den = 1.0 - np.conj(a) * z
                pole |= np.abs(den) < eps
                w = w * (z - a) / den
    w = np.where(pole, np.nan, w)
    return w, pole


def derivative_array(spec, z, w):
    """Vectorised ``|f'(z)|`` given ``w = f(z)``; the tangent maps reuse ``w - z``."""
    kind = spec.kind
    with np.errstate(over="ignore", invalid="ignore"):
        if kind in (MapKind.FATOU, MapKind.BAKER_DOMINGUEZ):
            return np.abs(1.0 - np.exp(-z))
        if kind is MapKind.DOUBLING:
            return np.abs(2.0 - np.exp(-z))
        if kind is MapKind.TAN:
            return np.abs(2.0 + (w - z) ** 2)
        if kind is MapKind.ABSORB:
            return np.abs(2.0 + (w - z - 1j) ** 2)
        if kind is MapKind.AFFINE:
            return np.full(np.shape(z), abs(spec.params["lam"]))
        return np.abs(np.vectorize(lambda x: derivative(spec, x), otypes=[complex])(z))


# -- orbits -------------------------------------------------------------------

class Termination(str, Enum):
    BUDGET = "budget_exhausted"
    ESCAPED = "escaped"
    POLE = "pole_hit"
    OVERFLOW = "overflow"
    PRECISION = "precision_loss"


@dataclass
class OrbitRecord:
    points: list
    termination: Termination
    index: int | None = None  # pole / overflow / first escape index
    rel_error: float = 0.0

    @property
    def n_steps(self):
        return len(self.points) - 1

    def to_json(self):
        return {"n_steps": self.n_steps, "termination": self.termination.value,
                "index": self.index, "rel_error": self.rel_error,
                "last_point": _jsonable(self.points[-1])}


def iterate(spec, z0, budget, escape_radius=math.inf, pole_eps=None, window=3,
            rel_error_threshold=1e-6):
    """Forward orbit of ``z0`` with pole, overflow, escape and precision checks.

    Escape requires ``window`` consecutive points beyond ``escape_radius``;
    ``index`` then holds the first point of that run.  The relative error
    estimate propagates ``err' = |f'(z)| err + eps |f(z)|``; pass
    ``rel_error_threshold=None`` to disable the precision stop.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not escape_radius > 0:
        raise ValueError("escape_radius must be positive")
    z = complex(z0)
    points = [z]
    run = 1 if abs(z) > escape_radius else 0
    err = 0.0
    ulp = 2.0 ** -53
    for k in range(budget):
        try:
            w = evaluate(spec, z, pole_eps)
        except PoleSignal as exc:
            exc.index = k
            return OrbitRecord(points, Termination.POLE, k, err)
        except OverflowSignal:
            return OrbitRecord(points, Termination.OVERFLOW, k, err)
        if rel_error_threshold is not None:
            try:
                err = abs(derivative(spec, z)) * err + ulp * abs(w)
            except (OverflowError, ZeroDivisionError):
                err = math.inf
        z = w
        points.append(z)
        rel = err / max(abs(z), 1.0)
        if rel_error_threshold is not None and rel > rel_error_threshold:
            return OrbitRecord(points, Termination.PRECISION, k + 1, rel)
        run = run + 1 if abs(z) > escape_radius else 0
        if run >= window:
            return OrbitRecord(points, Termination.ESCAPED, len(points) - run, err / max(abs(z), 1.0))
    return OrbitRecord(points, Termination.BUDGET, None, err / max(abs(z), 1.0))
