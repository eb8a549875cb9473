import csv
import hashlib
import json
import subprocess
import sys

import pytest

from collusionlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_json(capsys):
    code, out, _ = run(capsys, "classify", "--rule", "plurality", "--n", "12", "--m", "3",
                       "--scores", "8,2,2", "--c", "5", "--oracle")
    record = json.loads(out)
    assert code == 0
    assert record["status"] == "proof" and record["oracle_status"] == "proof"


def test_oracle_witness(capsys):
    code, out, _ = run(capsys, "oracle", "--rule", "plurality", "--n", "12", "--m", "3",
                       "--scores", "8,2,2", "--c", "6")
    record = json.loads(out)
    assert code == 0 and record["status"] == "manipulable"
    assert len(record["witness"]["truths"]) == 6


def test_strict_budget_exit_code(capsys):
    args = ["oracle", "--rule", "borda", "--n", "2", "--m", "6", "--scores", "5,5,5,5,5,5",
            "--c", "2", "--oracle-budget", "100"]
    assert run(capsys, *args)[0] == 0
    assert run(capsys, *args, "--strict")[0] == 4


def test_bad_flags_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--rule", "plurality", "--n", "3"])
    assert exc.value.code == 2
    code, _, _ = run(capsys, "classify", "--rule", "plurality", "--n", "3", "--m", "3", "--scores", "3,3,0")
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--rule", "plurality", "--n", "3", "--m", "3", "--seed", "-4"])
    assert exc.value.code == 2


def test_unsupported_exit_3(capsys):
    code, _, err = run(capsys, "estimate", "--rule", "borda", "--n", "2", "--m", "3", "--culture", "isc")
    assert code == 3 and "unsupported" in err


def test_count_audit(capsys):
    code, out, _ = run(capsys, "count", "--rule", "kapproval", "--k", "2", "--n", "2", "--m", "3", "--audit")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0
    assert rows == [{"rule": "kapproval", "n": "2", "m": "3", "k": "2",
                     "authoritative": "6", "paper_formula": "10", "match": "false"}]


def test_estimate_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "est.csv"
    code, _, _ = run(capsys, "estimate", "--rule", "plurality", "--n", "3", "--m", "3",
                     "--trials", "600", "--seed", "9", "--out", str(out))
    assert code == 0
    data = out.read_bytes()
    assert b"\r" not in data and data.endswith(b"\n")
    rows = list(csv.DictReader(data.decode("utf-8").splitlines()))
    assert rows[0]["trials"] == "600" and rows[0]["seed"] == "9"
    manifest = json.loads((tmp_path / "est.csv.manifest.json").read_text())
    assert manifest["outputs"]["est.csv"] == hashlib.sha256(data).hexdigest()
    assert manifest["config"]["seed"] == 9 and manifest["config"]["trials"] == 600


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("COLLUSIONLAB_SEED", "123")
    code, out, _ = run(capsys, "estimate", "--rule", "plurality", "--n", "3", "--m", "3", "--trials", "50")
    assert code == 0 and out.splitlines()[1].endswith(",123")


def test_sample_is_reproducible(capsys):
    args = ["sample", "--rule", "kapproval", "--k", "2", "--n", "3", "--m", "4", "--trials", "5", "--seed", "2"]
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b and len(a.splitlines()) == 6


def test_sweep_rows(capsys):
    code, out, _ = run(capsys, "sweep", "--rule", "plurality", "--m", "3", "--axis", "n",
                       "--values", "2,4,8", "--trials", "200")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and [r["n"] for r in rows] == ["2", "4", "8"]


def test_verify_bounds_single(capsys):
    code, out, _ = run(capsys, "verify-bounds", "--bound", "PluralityCP", "--n", "10", "--m", "3", "--c", "1")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and rows[0]["verdict"] == "Pass" and rows[0]["bound"] == "81/121"


def test_harness_single_point(capsys):
    code, out, _ = run(capsys, "harness", "--rule", "veto", "--n", "4", "--m", "4", "--c", "2",
                       "--tiebreak", "against")
    report = json.loads(out)
    assert code == 0 and report["summary"]["false_proof"] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "collusionlab", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "collusionlab" in proc.stdout
