import json
import os

import pytest
from click.testing import CliRunner

from chromasphere.cli import main

import oracles


@pytest.fixture()
def runner():
    return CliRunner()


def test_params_prints_canonical_json(runner):
    res = runner.invoke(main, ["params", "--R", "2.0"])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["x"] == pytest.approx(oracles.RADIUS_ORACLE[2.0]["x"], abs=1e-12)
    assert body["branches"]["linear"] == 4.0
    # canonical float formatting: 17 significant digits in the raw text
    assert "2.802517076888147" in res.stdout


def test_params_bad_radius_exits_2(runner):
    res = runner.invoke(main, ["params", "--R", "0.4"])
    assert res.exit_code == 2
    assert "error:" in res.stderr


def test_curve_header_and_grid(runner, tmp_path):
    res = runner.invoke(main, ["curve", "--rmin", "1.0", "--rmax", "2.0",
                               "--steps", "4"])
    assert res.exit_code == 0
    lines = res.stdout.splitlines()
    assert lines[0] == "R,x,two_R,three"
    assert len(lines) == 5
    # same request to a file produces identical bytes
    out = tmp_path / "curve.csv"
    res2 = runner.invoke(main, ["curve", "--rmin", "1.0", "--rmax", "2.0",
                                "--steps", "4", "--out", str(out)])
    assert res2.exit_code == 0
    assert out.read_text() == res.stdout


def test_construct_small_run_exit_0(runner):
    res = runner.invoke(main, ["construct", "--R", "2.0",
                               "--samples", "2000"])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["ok"] is True
    assert body["certificate"]["ok"] is True


def test_construct_critical_lambda_exit_1(runner):
    res = runner.invoke(main, ["construct", "--R", "2.0", "--samples", "500",
                               "--lambda-frac", "1.0"])
    assert res.exit_code == 1
    body = json.loads(res.stdout)
    assert body["ok"] is False
    assert body["certificate"]["kind"] == "invalid-parameter"
    assert "FAILED" in res.stderr


def test_seed_env_overrides_flag(runner):
    env = dict(os.environ, CHROMA_SEED="7")
    res = runner.invoke(main, ["construct", "--R", "2.0", "--samples", "500",
                               "--seed", "3"], env=env)
    assert res.exit_code == 0
    assert json.loads(res.stdout)["config"]["seed"] == 7


def test_seed_env_must_be_integer(runner):
    env = dict(os.environ, CHROMA_SEED="not-an-int")
    res = runner.invoke(main, ["construct", "--R", "2.0", "--samples", "500"],
                        env=env)
    assert res.exit_code == 2


def test_cover_lab_roundtrip(runner, tmp_path):
    inst = tmp_path / "c5.json"
    inst.write_text(json.dumps(
        {"vertices": 5, "edges": [[i, (i + 1) % 5] for i in range(5)]}))
    res = runner.invoke(main, ["cover-lab", "--instance", str(inst)])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["tau_star"] == pytest.approx(2.5, abs=1e-9)
    assert body["tau_exact"] == 3


def test_cover_lab_uncoverable_exit_2(runner, tmp_path):
    inst = tmp_path / "bad.json"
    inst.write_text(json.dumps({"vertices": 3, "edges": [[0, 1]]}))
    res = runner.invoke(main, ["cover-lab", "--instance", str(inst)])
    assert res.exit_code == 2
    assert "not coverable" in res.stderr


def test_cover_lab_malformed_file_exit_2(runner, tmp_path):
    inst = tmp_path / "nojson.json"
    inst.write_text("{ not json")
    res = runner.invoke(main, ["cover-lab", "--instance", str(inst)])
    assert res.exit_code == 2


def test_color_ball_small_run(runner, tmp_path):
    out = tmp_path / "ball"
    res = runner.invoke(main, ["color-ball", "--R", "0.9",
                               "--samples", "2000", "--out", str(out)])
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["ok"] is True
    assert (out / "plan.json").is_file()
    assert (out / "shells" / "cover_0000.json").is_file()
    assert (out / "report.json").is_file()
    # canonical artifacts exclude run-varying timings
    report = json.loads((out / "report.json").read_text())
    assert "timings" not in report
    assert (out / "timings.json").is_file()


def test_threads_option_sets_env_caps(runner):
    res = runner.invoke(main, ["--threads", "2", "params", "--R", "1.5"])
    assert res.exit_code == 0
    res_bad = runner.invoke(main, ["--threads", "0", "params", "--R", "1.5"])
    assert res_bad.exit_code == 2


def test_identical_runs_identical_output(runner):
    args = ["construct", "--R", "2.0", "--samples", "1000", "--seed", "5"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == b.exit_code == 0
    assert a.stdout == b.stdout
