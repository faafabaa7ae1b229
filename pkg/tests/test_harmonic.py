import csv
import math

import numpy as np
import pytest

from bakerlab import harmonic as H, hyperbolic as hy, maps
from bakerlab.harmonic import Fate, Membership

FATOU = maps.registry_get("fatou")
TAN = maps.registry_get("tan")
AFFINE = maps.registry_get("affine", {"lam": 2})


def test_membership_oracle():
    fatou_dom = H.OracleDomain(FATOU, hy.HalfPlane(1, 2.0))
    assert H.membership(fatou_dom, 10) is Membership.IN
    tan_dom = H.OracleDomain(TAN, hy.HalfPlane(1j, 1.0), exclusions=(hy.HalfPlane(-1j, 0.0),))
    assert H.membership(tan_dom, -5j) is Membership.OUT
    assert H.membership(tan_dom, math.pi / 2) is Membership.OUT
    assert H.membership(tan_dom, 0.3 + 0.5j) is Membership.IN


def test_entry_regions_are_forward_invariant():
    strip = H.OracleDomain(maps.registry_get("baker-dominguez"), H.Strip(1.0, math.pi / 2))
    assert H.validate_entry(strip, 256)
    assert H.validate_entry(H.OracleDomain(FATOU, hy.HalfPlane(1, 2.0)), 256)


def test_bad_entry_region_is_caught():
    with pytest.raises(Exception):
        H.validate_entry(H.OracleDomain(FATOU, hy.HalfPlane(-1, 0.0)), 64)


def test_disc_exit_law_from_center_is_uniform():
    u = np.array([0.0, 0.25, 0.5])
    assert np.allclose(H.disc_exit_point(0, u), [1, 1j, -1])


def test_halfplane_exit_law_median_is_foot_point():
    assert abs(H.halfplane_exit_point(hy.HalfPlane(1j, 0.0), 2 + 3j, 0.5) - 2) < 1e-12


def test_walk_ends_near_boundary():
    for domain, base in ((H.UnitDisc(), 0.3), (hy.HalfPlane(1j, 0), 1j)):
        s = H.wos_sample(domain, base, 1e-6, seed=4, index=0, method="walk")
        if isinstance(domain, H.UnitDisc):
            assert abs(abs(s.boundary_point) - 1) < 1e-12
        else:
            assert abs(s.boundary_point.imag) < 1e-12
        assert s.walk_steps >= 1


def test_oracle_radius_is_inside_domain():
    dom = H.OracleDomain(FATOU, hy.HalfPlane(1, 2.0))
    r = H.oracle_radius(dom, 5 + 0j)
    assert r > 0
    ring = 5 + r * np.exp(2j * np.pi * np.arange(32) / 32)
    assert np.all(H.membership_array(dom, ring) == 1)


def test_sample_streams_do_not_depend_on_threads():
    dom = hy.HalfPlane(1j, 0.0)
    a, _ = H.sample_boundary(dom, 1j, 300, seed=5, threads=1)
    b, _ = H.sample_boundary(dom, 1j, 300, seed=5, threads=4)
    assert np.array_equal(a, b)
    c, _ = H.sample_boundary(dom, 1j, 310, seed=5)
    assert np.array_equal(a, c[:300])


def test_boundary_fates():
    target = H.Box.interval(-1.0, 1.0)
    assert H.boundary_fate(TAN, 0.5, 10 ** 5, 1e10, target, 10)[0] is Fate.RECURRENT
    assert H.boundary_fate(TAN, math.pi / 2, 100, 1e10, target, 10)[0] is Fate.POLE_HIT
    assert H.boundary_fate(AFFINE, 0.3j, 1000, 1e10, target, 10)[0] is Fate.ESCAPING
    assert H.boundary_fate(TAN, 0.5, 5, 1e10, target, 10)[0] is Fate.UNDEFINED


def test_affine_dichotomy_escapes(tmp_path):
    rep = H.dichotomy_experiment(AFFINE, hy.HalfPlane(), 1.0, 50, 2000, seed=2)
    assert rep.fraction(Fate.ESCAPING) == 1.0
    path = tmp_path / "fates.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#") and lines[1].startswith("sample_id")
    assert len(list(csv.reader(lines[2:]))) == 50


def test_dichotomy_reproducible_across_threads():
    runs = [H.dichotomy_experiment(TAN, hy.HalfPlane(1j, 0.0), 1j, 300, 5000, seed=7,
                                   target=H.Box.interval(-1, 1), threads=t).to_json() for t in (1, 4)]
    assert runs[0] == runs[1]


def test_disc_semicircle_frequency():
    pts, how = H.sample_boundary(H.UnitDisc(), 0.5, 20000, seed=11)
    assert how == "exact-disc"
    assert abs(np.mean(np.abs(np.angle(pts)) < math.pi / 2) - 2 / math.pi * math.atan(3)) < 0.015


def test_membership_sensitivity_counts():
    dom = H.OracleDomain(FATOU, hy.HalfPlane(1, 2.0), budget=5)
    pts = np.array([10, 0.5, -3 + 1j, 2 + 40j])
    out = H.membership_sensitivity(dom, pts)
    assert out["budget"] == 5 and out["budget_extended"] == 10
    assert sum(out["at_budget"].values()) == 4 == sum(out["at_extended"].values())
    assert out["at_budget"]["InU"] <= out["at_extended"]["InU"]
