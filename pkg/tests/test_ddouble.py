import math

from hypothesis import given, strategies as st

from bakerlab.ddouble import DD, DDComplex, two_prod, two_sum

finite = st.floats(min_value=-1e100, max_value=1e100, allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_two_sum_is_exact(a, b):
    s, e = two_sum(a, b)
    assert s == a + b
    # the error term recovers what rounding dropped
    assert math.fsum([a, b, -s, -e]) == 0.0


@given(st.floats(min_value=-1e50, max_value=1e50, allow_nan=False), st.floats(min_value=-1e50, max_value=1e50, allow_nan=False))
def test_two_prod_error_term(a, b):
    p, e = two_prod(a, b)
    assert p == a * b
    assert abs(e) <= abs(p) * 2.0 ** -52 + 1e-300


def test_division_roundtrip_beyond_double():
    third = DD(1.0) / DD(3.0)
    back = third * DD(3.0) - DD(1.0)
    assert abs(back.hi + back.lo) < 1e-30
    assert third.lo != 0.0


def test_sqrt_two():
    r = DD(2.0).sqrt()
    err = r * r - DD(2.0)
    assert abs(float(err)) < 1e-30


def test_complex_angle_and_normalization():
    z = DDComplex(0.0, 2.0)
    assert math.isclose(z.angle(), math.pi / 2, rel_tol=0, abs_tol=1e-15)
    assert DDComplex(-1.0, -1e-3).angle() > math.pi
    u = DDComplex(3.0, 4.0).normalized()
    assert abs(float(u.abs2()) - 1.0) < 1e-30
    assert complex(u) == complex(0.6, 0.8)


def test_complex_arithmetic_matches_double():
    a, b = DDComplex(1.5, -2.0), DDComplex(0.25, 3.0)
    assert abs(complex(a * b) - (1.5 - 2j) * (0.25 + 3j)) < 1e-15
    assert abs(complex(a / b) - (1.5 - 2j) / (0.25 + 3j)) < 1e-15
    assert complex(a.conj()) == 1.5 + 2j
