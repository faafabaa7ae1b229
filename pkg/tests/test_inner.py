import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from bakerlab import inner, maps
from bakerlab.errors import InsufficientData
from bakerlab.inner import CircleArc, Multiplicity

MOBIUS = maps.registry_get("mobius", {"a": 0.5})
PARABOLIC = maps.registry_get("parabolic-mobius")
BLASCHKE = maps.registry_get("blaschke")

# arcs kept away from p = 1 (angle 0)
away_arcs = st.builds(lambda s, frac: CircleArc(s, frac * (2 * math.pi - 0.1 - s)),
                      st.floats(min_value=0.1, max_value=6.0), st.floats(min_value=0.01, max_value=1.0))


def test_hyperbolic_mobius_data():
    dw = inner.find_denjoy_wolff(MOBIUS)
    assert abs(dw.p - 1) < 1e-12
    assert abs(dw.q_root - 1 / 3) < 1e-6 and abs(dw.q_deriv - 1 / 3) < 1e-12
    assert dw.multiplicity is Multiplicity.ATTRACTING


def test_parabolic_mobius_is_double_root():
    dw = inner.find_denjoy_wolff(PARABOLIC)
    assert abs(dw.q - 1) < 1e-9
    assert dw.multiplicity is Multiplicity.PARABOLIC2


def test_quadratic_blaschke_is_triple_root():
    dw = inner.find_denjoy_wolff(BLASCHKE)
    assert abs(dw.p - 1) < 1e-9
    assert abs(dw.q - 1) < 1e-6 and abs(dw.second_derivative) < 1e-6
    assert dw.multiplicity is Multiplicity.PARABOLIC3


def test_interior_fixed_point_is_not_an_escaping_case():
    spec = maps.registry_get("blaschke", {"zeros": [0.0, 0.5]})  # fixes 0
    with pytest.raises(Exception):
        inner.find_denjoy_wolff(spec)


def test_root_rate_fit_recovers_geometric_rate():
    n = np.arange(300)
    assert abs(inner.fit_root_rate(0.7 * 0.4 ** n * (n + 1.0) ** 2) - 0.4) < 1e-3
    with pytest.raises(InsufficientData):
        inner.fit_root_rate([0.5, 0.25])


def test_arc_membership_wraps_around():
    arc = CircleArc(6.0, 1.0)
    assert arc.contains(0.5) and arc.contains(6.2) and not arc.contains(3.0)
    assert np.array_equal(arc.contains(np.array([0.5, 3.0])), [True, False])
    assert CircleArc.between(1.0, 0.5).length == pytest.approx(2 * math.pi - 0.5)


def test_mu_p_closed_form_half_circle():
    v = inner.mu_p(CircleArc(math.pi / 2, math.pi), 1 + 0j)
    assert abs(v.value - 1 / (2 * math.pi)) <= 1e-10
    assert inner.mu_p(CircleArc(-0.5, 1.0), 1 + 0j).infinite


@settings(max_examples=40, deadline=None)
@given(away_arcs)
def test_mu_p_closed_form_matches_quadrature(arc):
    a = inner.mu_p(arc, 1 + 0j).value
    b = inner.mu_p_quadrature(arc, 1 + 0j, 1e-11).value
    assert math.isclose(a, b, rel_tol=1e-8)


@settings(max_examples=40, deadline=None)
@given(away_arcs, st.floats(min_value=0.05, max_value=0.95))
def test_mu_p_is_additive(arc, split):
    left = CircleArc(arc.start, split * arc.length)
    right = CircleArc(arc.start + split * arc.length, (1 - split) * arc.length)
    total = inner.mu_p(arc, 1 + 0j).value
    assert math.isclose(inner.mu_p(left, 1 + 0j).value + inner.mu_p(right, 1 + 0j).value, total, rel_tol=1e-10)


@pytest.mark.parametrize("spec", [MOBIUS, PARABOLIC, BLASCHKE], ids=["mobius", "parabolic", "blaschke"])
@settings(max_examples=15, deadline=None)
@given(arc=away_arcs)
def test_mu_p_scales_by_q_under_preimage(spec, arc):
    chk = inner.check_mu_invariance(spec, arc)
    assert chk.rel_err < 1e-9 and chk.rel_err_quad < 1e-6


def test_preimages_split_by_degree():
    pre = inner.preimage_arcs(BLASCHKE, CircleArc(1.0, 1.0))
    assert len(pre) == 2
    for arc in pre:
        for t in np.linspace(arc.start, arc.end, 7)[1:-1]:
            assert CircleArc(1.0, 1.0).contains(BLASCHKE.blaschke.circle_map(t))


def test_boundary_orbit_first_step():
    orbit = inner.boundary_orbit(BLASCHKE, math.pi, 3)
    assert orbit.angles[1] == pytest.approx(0.0, abs=1e-15)


def test_hyperbolic_boundary_orbit_converges_to_p():
    orbit = inner.boundary_orbit(MOBIUS, math.pi - 1e-3, 200, truncate=False)
    assert abs(math.remainder(orbit.angles[-1], 2 * math.pi)) < 1e-6


def test_extended_precision_tracks_double_early_on():
    d = inner.boundary_orbit(BLASCHKE, 2.0, 30, precision="double", truncate=False)
    x = inner.boundary_orbit(BLASCHKE, 2.0, 30, precision="extended", truncate=False)
    assert np.allclose(d.angles[:10], x.angles[:10], atol=1e-9)
    assert x.precision == "extended"


def test_double_orbit_truncates_when_budget_spent():
    double = inner.boundary_orbit(BLASCHKE, 2.0, 20000, precision="double")
    assert double.truncated and double.log_derivative_product >= 15 * math.log(10)
    extended = inner.boundary_orbit(BLASCHKE, 2.0, 20000, precision="extended")
    assert len(extended.angles) > 10 * len(double.angles)
    # contraction towards p never exhausts the budget
    assert not inner.boundary_orbit(MOBIUS, 3.0, 500).truncated


def test_recurrence_full_circle_and_escaping_case():
    full = inner.recurrence_stats(BLASCHKE, CircleArc(0.0, 2 * math.pi), 8, 200, 10, seed=1)
    assert full.fraction == 1.0
    none = inner.recurrence_stats(MOBIUS, CircleArc(0.4, 0.2), 8, 2000, 10, seed=1)
    assert none.fraction == 0.0


def test_recurrence_is_thread_independent():
    runs = [inner.recurrence_stats(BLASCHKE, CircleArc(0.4, 0.2), 130, 3000, 5, seed=9, threads=t).to_json()
            for t in (1, 4)]
    assert runs[0] == runs[1]


def test_circle_coverage_statistic():
    dense = inner.circle_coverage(BLASCHKE, n_cells=32, n_steps=4000, n_orbits=8, seed=3)
    tight = inner.circle_coverage(MOBIUS, n_cells=32, n_steps=4000, n_orbits=8, seed=3)
    assert 0 < tight["mean"] < dense["mean"] <= 1
    assert dense == inner.circle_coverage(BLASCHKE, n_cells=32, n_steps=4000, n_orbits=8, seed=3)
