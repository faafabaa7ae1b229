import math

import pytest

from bakerlab import experiments as E
from bakerlab.cli import to_plain
from bakerlab.errors import ConfigError


def run(cfg, threads=1):
    return to_plain(E.run_experiment(cfg, threads).result)


def test_map_params_merge_from_top_level():
    res = E.run_experiment({"experiment": "orbit", "map": {"name": "mobius", "params": {"a": 0.2}}, "a": 0.5,
                            "budget": 3})
    assert res.config["map"]["params"]["a"] == 0.5 and "a" not in res.config


def test_inner_check_reports_rate_and_boundary_convergence():
    r = run({"experiment": "inner-check", "map": "mobius", "a": 0.5, "n_steps": 500, "n_boundary": 30})
    assert abs(r["denjoy_wolff"]["q_root"] - 1 / 3) < 1e-3
    assert r["boundary_convergence"]["fraction"] >= 0.99
    assert r["gap_tail_sum_from_50"] < 1e-6


def test_mu_invariance_over_random_arcs():
    r = run({"experiment": "mu-invariance", "map": "mobius", "n_arcs": 20})
    assert r["max_rel_err"] < 1e-6 and r["n_arcs"] == 20


def test_mu_invariance_explicit_arcs():
    r = run({"experiment": "mu-invariance", "map": "blaschke", "arcs": [[1.0, 0.5], [3.0, 2.0]]})
    assert r["n_arcs"] == 2


def test_sample_disc_and_halfplane():
    disc = run({"experiment": "sample", "map": "mobius", "basepoint": 0.5, "n_samples": 20000})
    s = disc["summary"]
    assert abs(s["right_semicircle"] - s["right_semicircle_exact"]) < 0.015
    hp = run({"experiment": "sample", "map": "tan", "n_samples": 5000})
    assert hp["summary"]["ks_cauchy"] < hp["summary"]["ks_critical_1pct"]


def test_dichotomy_default_domain_for_affine():
    r = run({"experiment": "dichotomy", "map": "affine", "lam": 2, "n_samples": 30, "iter_budget": 2000})
    assert r["fractions"]["Escaping"] == 1.0


def test_dichotomy_without_default_domain_needs_one():
    with pytest.raises(ConfigError):
        run({"experiment": "dichotomy", "map": "affine", "lam": [0, 2], "n_samples": 3})


def test_series_sequences():
    r = run({"experiment": "series-test", "sequence": {"kind": "power", "terms": [[1, 1]]}})
    assert r["gauss"]["verdict"] == "DivergentByGauss"
    r = run({"experiment": "series-test", "sequence": {"kind": "n-log-n"}, "n_start": 2, "tests": ["gauss"]})
    assert r["gauss"]["verdict"] == "ConditionNotMet" and "aaronson" not in r
    r = run({"experiment": "series-test", "map": "mobius", "sequence": {"kind": "orbit-gap"}, "length": 300})
    assert r["aaronson"]["verdict"] == "Converges_AEConvergence"
    with pytest.raises(ConfigError):
        run({"experiment": "series-test", "sequence": {"kind": "n-log-n"}, "n_start": 1})


def test_classify_reports_growth_for_plane_maps():
    r = run({"experiment": "classify", "map": "doubling-exp", "z0": 10, "N": 60,
             "metric": {"kind": "halfplane", "offset": 1}})
    assert r["verdict"] == "Hyperbolic"
    assert r["growth"]["eqK"] >= 1.9


def test_oracle_domain_sampling_runs():
    r = run({"experiment": "sample", "map": "baker-dominguez", "n_samples": 1,
             "domain": {"kind": "oracle", "entry": {"kind": "strip", "re_min": 1, "half_width": math.pi / 2},
                        "budget": 30}})
    assert r["sampling"] == "walk-on-spheres"
