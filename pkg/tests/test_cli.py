import subprocess
import sys

import pytest
import yaml

from excavtraj import cli


def test_seed_only_then_verify(tmp_path, capsys):
    assert cli.main(["seed-only", "--scenario", "experiment1", "--out", str(tmp_path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "status: seed" in out and "swept_volume_m3: 0.7" in out
    assert cli.main(["verify", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert "verified" in capsys.readouterr().out


def test_verify_mismatch_exit_code(tmp_path, capsys):
    cli.main(["seed-only", "--scenario", "experiment1", "--out", str(tmp_path)])
    s = yaml.safe_load((tmp_path / "summary.yaml").read_text())
    s["residuals"]["SweptVolumeCstr"] += 1.0
    (tmp_path / "summary.yaml").write_text(yaml.safe_dump(s, sort_keys=False))
    assert cli.main(["verify", "--out", str(tmp_path)]) == cli.EXIT_VERIFY
    assert "MISMATCH" in capsys.readouterr().out


def test_eval_seed_and_stored_trajectory(tmp_path, capsys):
    assert cli.main(["eval", "--scenario", "experiment2_fixed"]) == cli.EXIT_OK
    first = capsys.readouterr().out
    assert "SweptVolumeCstr: -0.1" in first
    cli.main(["seed-only", "--scenario", "experiment2_fixed", "--out", str(tmp_path)])
    capsys.readouterr()
    assert cli.main(["eval", "--scenario", "experiment2_fixed",
                     "--trajectory", str(tmp_path / "summary.yaml")]) == cli.EXIT_OK
    assert capsys.readouterr().out == first


def test_max_iterations_exit_code(tmp_path, capsys):
    code = cli.main(["run", "--scenario", "experiment2_variable", "--out", str(tmp_path), "--max-iters", "1"])
    assert code == cli.EXIT_MAX_ITERATIONS
    assert "status: max_iterations" in capsys.readouterr().out


def test_invalid_scenario_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nexcavator: table1_excavator\nsoil: {k_p: 1}\n")
    assert cli.main(["seed-only", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_INVALID
    assert "soil.rho_kg_m3" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_seed_failure_exit_code(tmp_path, capsys):
    from importlib import resources

    d = yaml.safe_load((resources.files("excavtraj") / "scenarios" / "experiment1.yaml").read_text())
    d["task"]["dig_start_x_m"] = 40.0
    p = tmp_path / "far.yaml"
    p.write_text(yaml.safe_dump(d))
    assert cli.main(["seed-only", "--scenario", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_SEED
    assert "seed failure" in capsys.readouterr().err


def test_verify_missing_directory(tmp_path, capsys):
    assert cli.main(["verify", "--out", str(tmp_path / "nothing")]) == cli.EXIT_IO


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--scenario", "experiment1"])
    assert exc.value.code == cli.EXIT_INVALID


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "excavtraj.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "seed-only" in r.stdout
