import csv
import json
import subprocess
import sys

import pytest

from bakerlab import cli


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return str(path)


def run(tmp_path, cfg, *extra, out="out"):
    out_dir = tmp_path / out
    code = cli.main(["run", write(tmp_path, cfg), "--out", str(out_dir), *extra])
    return code, out_dir


def load_report(out_dir, experiment):
    return json.loads((out_dir / f"{experiment}-report.json").read_text())


def test_maps_command(capsys):
    assert cli.main(["maps"]) == 0
    out = capsys.readouterr().out
    assert "fatou: z+1+e^{-z}" in out and "tan: z+tan z" in out


def test_console_script_is_installed():
    res = subprocess.run([sys.executable, "-m", "bakerlab.cli", "maps"], capture_output=True, text=True)
    assert res.returncode == 0 and "blaschke" in res.stdout


def test_fatou_steps_csv_converges(tmp_path):
    code, out = run(tmp_path, {"experiment": "steps", "map": "fatou", "z0": "10+0i", "N": 100000}, "--threads", "1")
    assert code == 0
    lines = (out / "steps-steps.csv").read_text().splitlines()
    assert lines[0].startswith("# n:")
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["n", "d_n", "n*d_n"]
    tail = [float(r[2]) for r in rows[1:] if int(r[0]) >= 1000]
    assert len(tail) > 90000
    assert max(abs(v - 1) for v in tail) < 0.01
    assert abs(tail[-1] - 1) < 1e-4


def test_blaschke_classify(tmp_path):
    code, out = run(tmp_path, {"experiment": "classify", "map": "blaschke",
                               "zeros": [[0, 0.5773502691896258], [0, -0.5773502691896258]], "N": 10000})
    assert code == 0
    report = load_report(out, "classify")
    assert report["result"]["verdict"] == "DoublyParabolic"
    # every threshold used for a verdict is reported
    assert {"trend_slope", "q_tol", "parabolic3_second_derivative_tol"} <= set(report["thresholds"])


def _strip_runtime(text):
    report = json.loads(text)
    report.pop("runtime")
    return json.dumps(report, sort_keys=True)


def test_tan_dichotomy_reports_are_reproducible(tmp_path):
    cfg = {"experiment": "dichotomy", "map": "tan", "n_samples": 200, "seed": 7}
    texts = []
    for i, threads in enumerate(("1", "1", "4")):
        code, out = run(tmp_path, cfg, "--threads", threads, out=f"o{i}")
        assert code == 0
        texts.append((out / "dichotomy-report.json").read_text())
        assert (out / "dichotomy-fates.csv").exists()
    assert len({_strip_runtime(t) for t in texts}) == 1
    report = json.loads(texts[0])
    assert report["result"]["n_samples"] == 200 and report["seed"] == 7
    assert set(report["runtime"]) == {"wall_time_s", "threads", "started_at"}


def test_report_goes_to_stdout_without_out_dir(tmp_path, capsys):
    assert cli.main(["run", write(tmp_path, {"experiment": "orbit", "map": "fatou", "budget": 2}),
                     "--threads", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["result"]["n_steps"] == 2
    assert report["config"]["map"] == {"name": "fatou", "params": {}}


def test_environment_sets_threads(tmp_path, monkeypatch):
    monkeypatch.setenv("BAKERLAB_THREADS", "3")
    code, out = run(tmp_path, {"experiment": "series-test"})
    assert code == 0
    assert load_report(out, "series-test")["runtime"]["threads"] == 3


@pytest.mark.parametrize("cfg", [
    "{not json",
    "[1, 2]",
    {"experiment": "orbit"},
    {"experiment": "teleport", "map": "fatou"},
    {"experiment": "orbit", "map": "cosine"},
    {"experiment": "orbit", "map": "mobius", "a": 3},
    {"experiment": "orbit", "map": "fatou", "N": -4},
    {"experiment": "orbit", "map": "fatou", "colour": "red"},
    {"experiment": "verify-propd", "map": "fatou", "c0": 0.5},
    {"experiment": "inner-check", "map": "fatou"},
], ids=["bad-json", "not-object", "no-map", "bad-experiment", "unknown-map", "bad-param", "negative-N",
        "unknown-key", "missing-c1", "not-inner"])
def test_config_errors_exit_2(tmp_path, cfg, capsys):
    code, _ = run(tmp_path, cfg)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.json")]) == 2


def test_compute_error_exits_3(tmp_path, capsys):
    # z0 = 1 lies outside {Re > 2}, where the Fatou step sequence is measured
    code, _ = run(tmp_path, {"experiment": "steps", "map": "fatou", "z0": 1, "N": 10})
    assert code == 3
    assert "OrbitLeftDomain" in capsys.readouterr().err


def test_csv_can_be_disabled(tmp_path):
    code, out = run(tmp_path, {"experiment": "orbit", "map": "tan", "z0": 0.5, "budget": 10,
                               "output": {"csv": False}})
    assert code == 0
    assert [p.name for p in out.iterdir()] == ["orbit-report.json"]


def test_non_finite_values_are_valid_json(tmp_path):
    code, out = run(tmp_path, {"experiment": "steps", "map": "fatou", "N": 2000})
    assert code == 0
    report = load_report(out, "steps")
    assert report["result"]["decay_fit"]["r_est"] == "inf"


def test_selftest_subset(capsys):
    assert cli.main(["selftest", "--only", "9"]) == 0
    assert "criterion 9: PASS" in capsys.readouterr().out
