import pytest

from trajkit.profile import reference_model_text

from cli_check import determinism_check, run


@pytest.fixture
def sample(tmp_path):
    root = tmp_path / "ws"
    assert run(["--workspace", str(root), "init", "--sample"])[0] == 0
    return root


def cli(root, *argv):
    return run(["--workspace", str(root), *argv])


def test_segment_sample(sample):
    code, out, _ = cli(sample, "segment", "MH-01")
    assert code == 0
    assert out.startswith("MH-01: 3 stops, 2 moves")
    assert (sample / "trajectories" / "MH-01.traj").is_file()


def test_relations_and_region(sample):
    cli(sample, "segment", "MH-01")
    cli(sample, "segment", "MH-02")
    code, out, _ = cli(sample, "relate", "MH-01", "MH-02")
    assert code == 0 and "intersects: true" in out and "far: false" in out
    code, out, _ = cli(sample, "region", "MH-01", "clinic-zone")
    assert code == 0 and "cross: true" in out and "crossings: 2" in out


def test_timeline_and_reconcile(sample):
    cli(sample, "segment", "MH-01")
    code, out, _ = cli(sample, "timeline", "MH-01")
    assert code == 0 and out.splitlines()[0].startswith("Ready\t")
    code, out, _ = cli(sample, "reconcile", "MH-01")
    assert code == 0 and out.strip().endswith("0 discrepancies")


def test_records_commands(sample):
    code, out, _ = cli(sample, "records", "add", "Hedi", "--field", "age=61")
    pid = out.strip()
    assert code == 0 and pid.startswith("P")
    assert cli(sample, "records", "prescribe", pid, "D1", "rest", "--at", "2010-03-01T09:00:00Z")[0] == 0
    code, _, err = cli(sample, "records", "prescribe", pid, "N1", "rest", "--at", "2010-03-01T09:00:00Z")
    assert code == 1 and "Nurse" in err
    code, out, _ = cli(sample, "records", "consult", "Hedi")
    assert code == 0 and '"rest"' in out
    assert "not found" in cli(sample, "records", "consult", "Nobody")[1]


def test_profile_commands(tmp_path):
    code, out, _ = run(["profile", "export"])
    assert code == 0 and len(out.splitlines()) == 15
    good = tmp_path / "good.model"
    good.write_text(reference_model_text())
    assert run(["profile", "validate", str(good)])[0] == 0
    bad = tmp_path / "bad.model"
    bad.write_text("class P «pda»\n")
    code, out, _ = run(["profile", "validate", str(bad)])
    assert code == 1 and out.startswith("V5 P")
    broken = tmp_path / "broken.model"
    broken.write_text("class P «pda\n")
    code, _, err = run(["profile", "validate", str(broken)])
    assert code == 1 and "line 1" in err


def test_exit_codes(tmp_path, sample):
    assert run(["bogus"])[0] == 2
    assert run(["--workspace", str(tmp_path / "none"), "segment", "MH-01"])[0] == 1
    assert cli(sample, "segment", "MH-01", "--radius", "-5")[0] == 2
    assert cli(sample, "relate", "MH-01", "MH-02")[0] == 1  # not segmented yet


def test_ingest_errors_report_line(sample, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("object_id,timestamp,lat,lon,device_id\nMH,2010-03-01T08:00:00Z,x,1,\n")
    code, _, err = cli(sample, "ingest", "fixes", str(bad))
    assert code == 1 and "line 2" in err


def test_env_var_and_flag(tmp_path, monkeypatch):
    env_root, flag_root = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("TRAJKIT_WORKSPACE", str(env_root))
    assert run(["init"])[0] == 0
    assert (env_root / "fixes").is_dir()
    assert run(["--workspace", str(flag_root), "init"])[0] == 0
    assert (flag_root / "fixes").is_dir()


def test_cli_is_deterministic(tmp_path):
    assert determinism_check(tmp_path / "det")
