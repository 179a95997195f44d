import json
import subprocess
import sys

import pytest

from kacwild import __version__
from kacwild.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("KACWILD_OUTPUT_DIR", str(tmp_path / "env"))
    return tmp_path


def test_simulate_twice_identical(outdir, capsys):
    argv = ["--output-dir", str(outdir), "simulate", "--law", "rademacher:1", "--t", "2",
            "--size", "1000", "--seed", "7"]
    assert run(argv, capsys)[0] == 0
    first = (outdir / "samples-t2-seed7.csv").read_bytes()
    assert run(argv + ["--threads", "4"], capsys)[0] == 0
    assert (outdir / "samples-t2-seed7.csv").read_bytes() == first
    assert first.startswith(b"# kacwild samples v1\n")


def test_manifest_and_replay(outdir, capsys):
    code, out, _ = run(["simulate", "--law", "twopoint:0,2,0.5", "--t", "1", "--size", "300",
                        "--seed", "11", "--format", "bin", "--output-dir", str(outdir)], capsys)
    assert code == 0
    art = outdir / "samples-t1-seed11.kacv"
    manifest = json.loads((outdir / "samples-t1-seed11.kacv.manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["config"]["seed"] == 11 and manifest["config"]["law"] == "twopoint:0,2,0.5"
    data = art.read_bytes()
    art.unlink()
    mpath = outdir / "m.json"
    mpath.write_text(json.dumps(manifest))
    assert run(["--config", str(mpath)], capsys)[0] == 0
    assert art.read_bytes() == data


def test_env_output_dir(outdir, capsys):
    assert run(["simulate", "--size", "10", "--seed", "1"], capsys)[0] == 0
    assert (outdir / "env" / "samples-t1-seed1.csv").exists()


def test_config_overridden_by_flags(outdir, capsys):
    cfg = outdir / "c.json"
    cfg.write_text(json.dumps({"law": {"name": "gaussian", "params": [2]}, "t": 0.5, "size": 50,
                               "seed": 3, "output_dir": str(outdir)}))
    code, out, _ = run(["simulate", "--config", str(cfg), "--size", "20"], capsys)
    assert code == 0
    assert json.loads(out)["size"] == 20
    manifest = json.loads((outdir / "samples-t0p5-seed3.csv.manifest.json").read_text())
    assert manifest["config"]["law"] == "gaussian:2" and manifest["config"]["size"] == 20


def test_seed_required(capsys):
    code, _, err = run(["simulate", "--size", "10"], capsys)
    assert code == 2
    assert json.loads(err)["error"] == "ArgumentError"
    code, _, _ = run(["rate-study", "--size", "10"], capsys)
    assert code == 2


def test_bad_law_exit_code(capsys):
    code, _, err = run(["simulate", "--law", "weird:1", "--seed", "1"], capsys)
    assert code == 3
    payload = json.loads(err)
    assert payload["error"] == "LawError" and payload["exit_code"] == 3


def test_domain_exit_code(capsys):
    code, _, err = run(["bounds", "general", "--law", "student:3", "--t", "0.1"], capsys)
    assert code == 4
    assert json.loads(err)["info"]["t0"] > 0.1
    code, _, _ = run(["bounds", "general", "--c", "0.5"], capsys)
    assert code == 4


def test_nu_cap_exit_code(capsys):
    code, _, err = run(["simulate", "--t", "8", "--size", "100", "--seed", "1", "--nu-cap", "20"], capsys)
    assert code == 5
    assert json.loads(err)["error"] == "NuCapExceeded"


def test_unknown_config_key(outdir, capsys):
    cfg = outdir / "c.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(["simulate", "--seed", "1", "--config", str(cfg)], capsys)[0] == 2


def test_solve_both(outdir, capsys):
    code, out, _ = run(["solve", "--law", "rademacher:1", "--method", "both", "--t", "1",
                        "--output-dir", str(outdir), "--plot"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["sup_discrepancy"] <= 1e-4
    assert res["truncation_bound"] == pytest.approx(1.0765e-8, rel=1e-4)
    assert (outdir / "solution-t1-ode.csv").exists()
    assert (outdir / "solution-t1-wild.svg").exists()


def test_solve_unstable_exit_code(outdir, capsys):
    # a step above the documented limit is an argument error
    assert run(["solve", "--method", "ode", "--step", "0.5", "--output-dir", str(outdir)], capsys)[0] == 2


def test_tree_stats(outdir, capsys):
    code, out, _ = run(["tree-stats", "--n", "4", "--enumerate", "--x", "0.5,1", "--size", "2000",
                        "--seed", "2", "--output-dir", str(outdir)], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["catalan"] == 5
    assert res["depth_moment_exact"]["1.0"] == pytest.approx(4.0)
    assert res["depth_moment_mc"]["0.5"]["mean"] == pytest.approx(1.0)
    assert len((outdir / "trees-n4.csv").read_text().splitlines()) == 6


@pytest.mark.parametrize("argv,key,value", [
    (["bounds", "alpha", "--p", "4"], "alpha_p", 0.375),
    (["bounds", "lemma1", "--x", "0.9", "--p", "3", "--t", "10"], "bound", 0.3025058),
    (["bounds", "depth-moment", "--x", "0.5", "--t", "3"], "value", 1.0),
    (["bounds", "berry-esseen", "--t", "0"], "bound", 0.56),
    (["bounds", "t0", "--law", "rademacher:1"], "t0", 0.0),
])
def test_bounds(outdir, capsys, argv, key, value):
    code, out, _ = run(argv + ["--output-dir", str(outdir)], capsys)
    assert code == 0
    assert json.loads(out)[key] == pytest.approx(value, rel=1e-6)


def test_rate_study(outdir, capsys):
    code, out, _ = run(["rate-study", "--law", "rademacher:1", "--t-grid", "1,2,3", "--size", "3000",
                        "--seed", "4", "--output-dir", str(outdir)], capsys)
    assert code == 0
    assert json.loads(out)["t_grid"] == [1.0, 2.0, 3.0]
    for ext in ("csv", "json", "dat", "svg", "csv.manifest.json"):
        assert (outdir / f"rate-rademacher-1.{ext}").exists()


def test_no_command(capsys):
    assert run([], capsys)[0] == 2


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "kacwild.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert __version__ in res.stdout


@pytest.mark.slow
def test_verify_command(outdir, capsys):
    code, out, _ = run(["verify", "--output-dir", str(outdir)], capsys)
    assert "ALL PASS" in out
    assert code == 0
    report = json.loads((outdir / "verify.json").read_text())
    assert report["passed"] and len(report["checks"]) == 5
