import csv
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from bakerlab import hyperbolic as hy, maps
from bakerlab.errors import DomainViolation, OrbitLeftDomain, SegmentLeavesDomain


def disc_points():
    return st.builds(lambda r, t: r * complex(math.cos(t), math.sin(t)),
                     st.floats(min_value=0.0, max_value=0.99), st.floats(min_value=0.0, max_value=2 * math.pi))


halfplane_points = st.builds(complex, st.floats(min_value=1e-3, max_value=1e3),
                             st.floats(min_value=-1e3, max_value=1e3))
# Cayley images stay at least ~1e-4 from the circle, where double rounding of the image is harmless
moderate_points = st.builds(complex, st.floats(min_value=1e-2, max_value=1e2),
                            st.floats(min_value=-10, max_value=10))


def test_disc_distance_closed_form():
    assert abs(hy.dist_disc(0, 0.5) - math.log(3)) < 1e-12
    assert hy.dist_disc(0.3j, 0.3j) == 0.0


def test_disc_distance_far_from_center_keeps_precision():
    r = 1 - 1e-12
    gap = 1 - r  # exact in floating point
    expect = math.log(1 + r) - math.log(gap)
    assert abs(hy.dist_disc(0, r) - expect) < 1e-12 * expect


@settings(max_examples=200)
@given(moderate_points, moderate_points)
def test_cayley_carries_halfplane_distance_to_disc(w1, w2):
    a = hy.dist_halfplane(hy.HalfPlane(), w1, w2)
    b = hy.dist_disc(hy.cayley(w1), hy.cayley(w2))
    assert abs(a - b) <= 1e-12 * max(1.0, a)


@given(disc_points(), disc_points(), disc_points())
def test_disc_triangle_inequality(a, b, c):
    assert hy.dist_disc(a, c) <= hy.dist_disc(a, b) + hy.dist_disc(b, c) + 1e-9


@given(disc_points(), disc_points(), disc_points(), st.floats(min_value=0, max_value=2 * math.pi))
def test_disc_automorphisms_are_isometries(z1, z2, a, t):
    rot = complex(math.cos(t), math.sin(t))

    def phi(z):
        return rot * (z - a) / (1 - a.conjugate() * z)

    assert abs(hy.dist_disc(phi(z1), phi(z2)) - hy.dist_disc(z1, z2)) <= 1e-7 * max(1.0, hy.dist_disc(z1, z2))


@given(halfplane_points, halfplane_points, st.floats(min_value=0, max_value=2 * math.pi),
       st.floats(min_value=-5, max_value=5))
def test_rotated_shifted_halfplane_matches_right_halfplane(w1, w2, t, offset):
    d = complex(math.cos(t), math.sin(t))
    model = hy.HalfPlane(d, offset)
    z1, z2 = (w1 + offset) * d, (w2 + offset) * d
    assert math.isclose(hy.dist_halfplane(model, z1, z2), hy.dist_halfplane(hy.HalfPlane(), w1, w2),
                        rel_tol=1e-9, abs_tol=1e-9)


def test_points_outside_models_raise():
    with pytest.raises(DomainViolation):
        hy.dist_disc(0, 1.0)
    with pytest.raises(DomainViolation):
        hy.dist_halfplane(hy.HalfPlane(1j, 0), 1j, -1j)


def test_halfplane_direction_must_be_unit():
    with pytest.raises(ValueError):
        hy.HalfPlane(2.0)


def test_domain_upper_bound_on_a_halfplane():
    q = hy.dist_domain_upper(lambda z: z.real, 1, 2)
    assert abs(q.value - 2 * math.log(2)) < 1e-9
    assert q.value >= hy.dist_halfplane(hy.HalfPlane(), 1, 2)
    assert hy.dist_domain_upper(lambda z: z.real, 3, 3).value == 0.0


def test_domain_upper_bound_detects_exit():
    with pytest.raises(SegmentLeavesDomain):
        hy.dist_domain_upper(lambda z: z.real, 1, -1)


def test_mobius_steps_are_constant():
    steps = hy.step_sequence(maps.registry_get("mobius", {"a": 0.5}), 0, hy.Disc(), 40)
    assert np.allclose(steps.d, math.log(3), rtol=0, atol=1e-9)


def test_blaschke_steps_decay_like_half_over_n():
    steps = hy.step_sequence(maps.registry_get("blaschke"), 0, hy.Disc(), 4000)
    n = steps.n[1000:]
    assert np.max(np.abs(2 * n * steps.d[1000:] - 1)) < 0.1
    assert steps.gaps is not None and steps.notes["tracking"] == "boundary-relative"


@settings(max_examples=20, deadline=None)
@given(disc_points())
def test_schwarz_pick_steps_never_increase(z0):
    for name in ("blaschke", "parabolic-mobius"):
        d = hy.step_sequence(maps.registry_get(name), z0, hy.Disc(), 100).d
        assert np.all(np.diff(d) <= 1e-12 * np.maximum(1.0, d[:-1]))


def test_fatou_steps_in_subdomain():
    metric = hy.HalfPlane(1, 2.0, bound_only=True)
    steps = hy.step_sequence(maps.registry_get("fatou"), 10, metric, 5000)
    assert steps.is_upper_bound
    nd = steps.n[1000:] * steps.d[1000:]
    assert 0.9 <= nd.min() and nd.max() <= 1.1


def test_orbit_outside_model_is_rejected():
    with pytest.raises(OrbitLeftDomain):
        hy.step_sequence(maps.registry_get("fatou"), 1, hy.HalfPlane(1, 2.0), 10)


def test_upper_bound_metric_dominates_exact_one():
    spec = maps.registry_get("tan")
    exact = hy.step_sequence(spec, 0.2 + 3j, hy.HalfPlane(1j, 0), 5).d
    upper = hy.step_sequence(spec, 0.2 + 3j, hy.DomainUpperBound(lambda z: z.imag), 5)
    assert upper.is_upper_bound
    assert np.all(upper.d >= exact - 1e-12)


def test_step_csv(tmp_path):
    steps = hy.step_sequence(maps.registry_get("mobius"), 0, hy.Disc(), 5)
    path = tmp_path / "steps.csv"
    steps.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["n", "d_n", "n*d_n"]
    assert len(rows) == 6
    assert float(rows[3][2]) == pytest.approx(2 * float(rows[3][1]))
