import cmath
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from bakerlab import maps
from bakerlab.errors import InvalidParam, PoleSignal, TruncationRangeError, UnknownMap
from bakerlab.maps import Termination

coord = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_fatou_values_and_orbit():
    f = maps.registry_get("fatou")
    assert maps.evaluate(f, 0) == 2
    orbit = maps.iterate(f, 0, 2)
    assert orbit.points[:2] == [0, 2]
    assert abs(orbit.points[2] - (3 + math.exp(-2))) < 1e-15
    assert orbit.termination is Termination.BUDGET


def test_tan_pole_is_reported_not_evaluated():
    t = maps.registry_get("tan")
    with pytest.raises(PoleSignal):
        maps.evaluate(t, math.pi / 2)
    rec = maps.iterate(t, math.pi / 2, 10)
    assert rec.termination is Termination.POLE and rec.index == 0


def test_affine_escape_index_marks_first_point_of_run():
    rec = maps.iterate(maps.registry_get("affine", {"lam": 2}), 1, 100, escape_radius=100)
    assert rec.termination is Termination.ESCAPED
    assert rec.index == 7  # 2**7 = 128 is the first point beyond 100


def test_overflow_is_a_termination():
    rec = maps.iterate(maps.registry_get("fatou"), -800, 5)
    assert rec.termination is Termination.OVERFLOW


def test_precision_stop():
    rec = maps.iterate(maps.registry_get("fatou"), 0, 50, rel_error_threshold=1e-20)
    assert rec.termination is Termination.PRECISION and rec.index == 1
    rec = maps.iterate(maps.registry_get("fatou"), 0, 50, rel_error_threshold=None)
    assert rec.termination is Termination.BUDGET


@pytest.mark.parametrize("name,params,field", [
    ("mobius", {"a": 1.5}, "a"),
    ("blaschke", {"zeros": [[1.2, 0]]}, "zeros"),
    ("blaschke", {"rotation": 2}, "rotation"),
    ("mane", {"delta": 2.5}, "delta"),
    ("mane", {"terms": 0}, "terms"),
    ("tan", {"half_plane": "up"}, "half_plane"),
    ("fatou", {"a": 1}, "a"),
])
def test_invalid_parameters(name, params, field):
    with pytest.raises(InvalidParam, match=field):
        maps.registry_get(name, params)


def test_unknown_map():
    with pytest.raises(UnknownMap):
        maps.registry_get("cosine")


def test_catalog_lines():
    lines = maps.list_maps()
    assert lines
    assert any(line.startswith("fatou: z+1+e^{-z}") for line in lines)
    assert any(line.startswith("tan: z+tan z") for line in lines)


@pytest.mark.parametrize("text,value", [("10+0i", 10), ("-2.5i", -2.5j), ([1, 2], 1 + 2j), (3, 3)])
def test_parse_complex(text, value):
    assert maps.parse_complex(text) == value


def test_parse_complex_rejects_garbage():
    with pytest.raises(InvalidParam):
        maps.parse_complex("ten")


@pytest.mark.parametrize("name", ["fatou", "baker-dominguez", "tan", "doubling-exp", "mane"])
@settings(max_examples=40, deadline=None)
@given(x=coord, y=coord)
def test_real_maps_commute_with_conjugation(name, x, y):
    spec = maps.registry_get(name, {"terms": 50} if name == "mane" else {})
    z = complex(x, y)
    try:
        w = maps.evaluate(spec, z)
    except PoleSignal:
        return
    assert abs(maps.evaluate(spec, z.conjugate()) - w.conjugate()) <= 1e-12 * max(1.0, abs(w))


@pytest.mark.parametrize("name", ["fatou", "tan", "absorb", "doubling-exp", "mobius", "blaschke", "mane"])
@settings(max_examples=30, deadline=None)
@given(x=st.floats(min_value=-0.6, max_value=0.6), y=st.floats(min_value=-0.6, max_value=0.6))
def test_derivative_matches_difference_quotient(name, x, y):
    spec = maps.registry_get(name, {"terms": 50} if name == "mane" else {})
    z = complex(x, y) + (0.3 if name == "mane" else 0)
    h = 1e-6
    try:
        fd = (maps.evaluate(spec, z + h) - maps.evaluate(spec, z - h)) / (2 * h)
    except PoleSignal:
        return
    d = maps.derivative(spec, z)
    assert abs(fd - d) <= 1e-5 * max(1.0, abs(d))


@pytest.mark.parametrize("name", ["fatou", "tan", "mobius", "blaschke", "affine"])
def test_array_evaluation_agrees(name):
    spec = maps.registry_get(name)
    rng = np.random.default_rng(3)
    z = 0.9 * (rng.uniform(-1, 1, 50) + 1j * rng.uniform(-1, 1, 50)) / math.sqrt(2)
    w, pole = maps.evaluate_array(spec, z)
    assert not pole.any()
    expect = np.array([maps.evaluate(spec, v) for v in z])
    assert np.allclose(w, expect, rtol=1e-13, atol=1e-15)
    d = maps.derivative_array(spec, z, w)
    assert np.allclose(np.abs(d), [abs(maps.derivative(spec, v)) for v in z], rtol=1e-12)


def test_array_evaluation_flags_poles():
    w, pole = maps.evaluate_array(maps.registry_get("tan"), np.array([math.pi / 2, 0.1]))
    assert pole.tolist() == [True, False]


def test_real_input_stays_real_for_real_maps():
    w, _ = maps.evaluate_array(maps.registry_get("tan"), np.array([0.5, 1.0]))
    assert np.isrealobj(w)


def test_mane_truncation_range_and_tail_bound():
    spec = maps.registry_get("mane", {"delta": 1.5, "terms": 100})
    with pytest.raises(TruncationRangeError):
        maps.evaluate(spec, 100j)
    z = 1 + 1j
    bound = maps.mane_tail_bound(spec, z)
    longer = maps.registry_get("mane", {"delta": 1.5, "terms": 20000})
    dropped = abs(maps.evaluate(longer, z) - maps.evaluate(spec, z))
    assert dropped <= bound


def test_mobius_matches_formula():
    spec = maps.registry_get("mobius", {"a": 0.5})
    z = 0.2 - 0.3j
    assert abs(maps.evaluate(spec, z) - (z + 0.5) / (1 + 0.5 * z)) < 1e-15


def test_parabolic_mobius_matches_formula():
    spec = maps.registry_get("parabolic-mobius")
    z = 0.1 + 0.4j
    expect = ((2 - 1j) * z + 1j) / ((2 + 1j) - 1j * z)
    assert abs(maps.evaluate(spec, z) - expect) < 1e-15


def test_default_blaschke_is_the_quadratic_example():
    spec = maps.registry_get("blaschke")
    z = 0.3 + 0.2j
    assert abs(maps.evaluate(spec, z) - (3 * z * z + 1) / (z * z + 3)) < 1e-15


def test_absorb_formula():
    spec = maps.registry_get("absorb")
    z = 0.3 + 2j
    assert abs(maps.evaluate(spec, z) - (z + 1j + cmath.tan(z))) < 1e-15


def test_orbit_json():
    rec = maps.iterate(maps.registry_get("fatou"), 0, 2)
    out = rec.to_json()
    assert out["n_steps"] == 2 and out["termination"] == "budget_exhausted"
