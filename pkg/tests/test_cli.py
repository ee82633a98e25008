from __future__ import annotations

import json
import subprocess
import sys

import pytest

from snbump.cli import main
from snbump.io import read_table, sidecar_path


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(autouse=True)
def cache(monkeypatch, workdir):
    monkeypatch.setenv("SNBUMP_CACHE_DIR", str(workdir / "cache"))


def test_ground_state_csv_is_deterministic(workdir):
    assert main(["ground-state", "--out", str(workdir / "g1")]) == 0
    assert main(["ground-state", "--out", str(workdir / "g2")]) == 0
    a = (workdir / "g1" / "ground_state.csv").read_bytes()
    b = (workdir / "g2" / "ground_state.csv").read_bytes()
    assert a == b
    side = json.loads(sidecar_path(workdir / "g1" / "ground_state.csv").read_text())
    assert side["metadata"]["config"]["command"] == "ground-state"
    assert (workdir / "g1" / "run.log").read_text().count("numpy") >= 1


def test_nondegeneracy_command(workdir):
    assert main(["nondegeneracy", "--out", str(workdir / "n")]) == 0
    rows, _ = read_table(workdir / "n" / "nondegeneracy.csv")
    assert sum(r["near_zero"] for r in rows) == 1


def test_asymptotics_fit_reports_candidate(workdir, capsys):
    assert main(["asymptotics", "--fit-interaction-constant", "--out", str(workdir / "a")]) == 0
    text = (workdir / "a" / "interaction_constant.csv").read_text()
    flag = [ln for ln in text.splitlines() if ln.startswith("# fitted c")]
    assert len(flag) == 1 and "matches 1/(8 pi^2)" in flag[0]
    assert "matches 1/(8 pi^2)" in capsys.readouterr().out
    rows, _ = read_table(workdir / "a" / "energy_expansion.csv")
    assert [r["s"] for r in rows] == [4, 6, 8]


def test_asymptotics_degenerate_regime(workdir):
    assert main(["asymptotics", "--m", "0.3", "--a", "1", "--out", str(workdir / "d")]) == 0
    assert "spacing decreasing: true" in (workdir / "d" / "degenerate_regime.csv").read_text()


@pytest.mark.parametrize("argv", [
    ["scan-f", "--m", "1.5"],
    ["solve", "--s", "2"],
    ["ground-state", "--grid-h", "-1"],
])
def test_config_errors_exit_2(workdir, argv):
    assert main(argv + ["--out", str(workdir / "bad")]) == 2


def test_bad_config_file_exit_2(workdir):
    p = workdir / "bad.ini"
    p.write_text("[grid]\nhh = 1\n")
    assert main(["ground-state", "--config", str(p), "--out", str(workdir / "bad")]) == 2


def test_unparseable_flags_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["solve", "--s", "four"])
    assert info.value.code == 2


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    import os

    root = tmp_path_factory.mktemp("solve")
    (root / "run.ini").write_text("[ring]\ns = 4\n[solver]\nn_r = 5\n")
    env = dict(os.environ, SNBUMP_CACHE_DIR=str(root / "cache"))
    proc = subprocess.run([sys.executable, "-m", "snbump.cli", "solve", "--config", str(root / "run.ini"),
                           "--out", str(root / "out")], env=env, capture_output=True, text=True)
    return root, proc


def test_solve_writes_certificate_and_dump(solved):
    root, proc = solved
    assert proc.returncode == 0, proc.stderr
    cert = json.loads((root / "out" / "certificate_s4.json").read_text())
    assert cert["residual_inf"] <= cert["residual_tolerance"]
    assert cert["config"]["s"] == [4]
    assert (root / "out" / "u_s4.bin").stat().st_size == 8 * 61**3


def test_verify_roundtrip(solved, tmp_path):
    root, _ = solved
    assert main(["verify", str(root / "out" / "certificate_s4.json"), "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "verify.json").read_text())
    assert res["diff_inf"] <= 1e-12 and res["diff_l2"] <= 1e-12


def test_verify_detects_tampered_certificate(solved, tmp_path):
    root, _ = solved
    cert = json.loads((root / "out" / "certificate_s4.json").read_text())
    cert["residual_inf"] *= 2.0
    fake = root / "out" / "tampered.json"
    fake.write_text(json.dumps(cert))
    assert main(["verify", str(fake), "--out", str(tmp_path)]) == 3


def test_verify_detects_corrupt_dump(solved, tmp_path):
    root, _ = solved
    out = root / "copy"
    out.mkdir()
    for name in ("certificate_s4.json", "u_s4.bin", "u_s4.bin.json"):
        (out / name).write_bytes((root / "out" / name).read_bytes())
    with open(out / "u_s4.bin", "ab") as fh:
        fh.write(b"\0")
    assert main(["verify", str(out / "certificate_s4.json"), "--out", str(tmp_path)]) == 4
    assert main(["verify", str(out / "missing.json"), "--out", str(tmp_path)]) == 4
