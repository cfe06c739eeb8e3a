import json
import subprocess
import sys

import pytest

from bsgaps.cli import main
from conftest import DATA


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(out):
    return json.loads(out)["result"]


def test_gaps_default_example(capsys):
    code, out, _ = run(capsys, "gaps", "--window", "1:30", "--cutoff", "4", "--kgrid", "6", "--no-refine")
    assert code == 0
    doc = json.loads(out)
    assert doc["provenance"]["tool"] == "bsgaps" and doc["provenance"]["command"] == "gaps"
    assert "timestamp" not in doc["provenance"]
    assert "gaps" in doc["result"] and "bandIntervals" in doc["result"]
    assert doc["provenance"]["config"]["cutoffMode"] == "margin"


def test_uncertified_window_exits_2(capsys):
    code, out, err = run(capsys, "gaps", "--window", "1:500", "--cutoff", "6")
    assert code == 2 and out == ""
    assert "uncertified window" in err and len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("argv", [["frobnicate"], ["gaps"], ["gaps", "--window", "a:b"],
                                  ["asym", "--xi", "1,x"], ["gaps", "--window", "3:1"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("bsgaps:")


def test_malformed_potential_exits_2(capsys):
    code, _, err = run(capsys, "asym", "--xi", "10,3", "--potential", str(DATA / "broken_symmetry.json"))
    assert code == 2 and "InvalidPotential" in err
    code, _, err = run(capsys, "asym", "--xi", "10,3", "--potential", "/nonexistent.json")
    assert code == 2


def test_bands_csv(capsys, tmp_path):
    target = tmp_path / "bands.csv"
    code, out, _ = run(capsys, "bands", "--lambda-max", "5", "--kgrid", "3", "--cutoff", "3",
                       "--out", str(target))
    assert code == 0 and out == ""
    lines = target.read_text().splitlines()
    header = next(l for l in lines if not l.startswith("#"))
    assert header.startswith("k1,k2,lambda_1")
    assert sum(1 for l in lines if l and l[0] not in "#k") == 9


def test_ids_csv(capsys):
    code, out, _ = run(capsys, "ids", "--lambda", "5,10", "--kgrid", "4", "--cutoff", "4")
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert code == 0 and rows[0] == "lambda,N,error" and len(rows) == 3


def test_asym_and_classify(capsys):
    code, out, _ = run(capsys, "asym", "--xi", "40,17", "--potential", str(DATA / "cos2d.json"))
    assert code == 0 and abs(body(out)["value"] - (40 ** 2 + 17 ** 2)) <= 2
    code, out, _ = run(capsys, "classify", "--rho", "100", "--xi", "100,0")
    assert code == 0 and body(out)["label"] == "Resonant"


def test_regions_volume_latcheck(capsys):
    code, out, _ = run(capsys, "regions", "--samples", "200", "--potential", str(DATA / "aniso2d.json"))
    assert code == 0 and body(out)["total"]
    code, out, _ = run(capsys, "volume", "--rho", "30", "--delta", "1", "--samples", "2000")
    assert code == 0
    code, out, _ = run(capsys, "latcheck", "--dim", "3", "--radius", "3", "--trials", "5")
    assert code == 0 and body(out)["boundViolations"] == 0


def test_perturb_check_is_byte_identical(capsys):
    argv = ["perturb-check", "--trials", "20", "--max-dim", "12", "--seed", "3"]
    first = run(capsys, *argv)
    second = run(capsys, *argv[:-2], "--seed", "3")
    assert first[0] == 0 and first[1] == second[1]
    assert body(first[1])["violations"] == 0
    assert json.loads(first[1])["provenance"]["seed"] == 3


def test_seed_position_and_timestamp(capsys):
    a = run(capsys, "--seed", "9", "perturb-check", "--trials", "5", "--max-dim", "8")[1]
    b = run(capsys, "perturb-check", "--trials", "5", "--max-dim", "8", "--seed", "9")[1]
    assert a == b
    c = run(capsys, "perturb-check", "--trials", "5", "--max-dim", "8", "--timestamp")[1]
    assert "timestamp" in json.loads(c)["provenance"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bsgaps.cli", "latcheck", "--trials", "2", "--dim", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["boundViolations"] == 0
