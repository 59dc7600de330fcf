import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from huap.bench import CSV_COLUMNS
from huap.cli import main

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


@pytest.fixture
def home(tmp_path):
    h = tmp_path / "home"

    def run(*argv):
        return main(["--home", str(h), *argv])

    run.path = h
    run.tmp = tmp_path
    return run


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _setup(home):
    assert home("setup", "--universe", str(SCEN / "universe.json")) == 0
    assert home("keygen", "--attrs", str(SCEN / "alice.json"), "--out", str(home.tmp / "alice.huap")) == 0
    assert home("keygen", "--attrs", str(SCEN / "bob.json"), "--out", str(home.tmp / "bob.huap")) == 0
    assert home("owner-setup") == 0
    assert home("rkey") == 0


def test_end_to_end_file_flow(home, capsys):
    _setup(home)
    assert home("enc-offline", "--pool", "2") == 0
    data = os.urandom(50_000)
    src = home.tmp / "vitals.bin"
    src.write_bytes(data)
    assert home("enc-online", "--in", str(src), "--object", "rec1") == 0
    assert home("policy", "--file", str(SCEN / "policy.json"), "--object", "rec1") == 0
    out = home.tmp / "out.bin"
    assert home("decrypt", "--key", str(home.tmp / "alice.huap"), "--object", "rec1", "--out", str(out)) == 0
    assert out.read_bytes() == data
    capsys.readouterr()
    assert home("decrypt", "--key", str(home.tmp / "bob.huap"), "--object", "rec1") == 1
    assert "access denied (no matching gate)" in capsys.readouterr().err

    # add a researcher gate: bob gets in without an epoch change
    gate = _write(home.tmp / "gate.json", {"role": "researcher", "dept": "*", "shift": "*"})
    assert home("update", "add", "--object", "rec1", "--gate", gate) == 0
    assert home("decrypt", "--key", str(home.tmp / "bob.huap"), "--object", "rec1", "--out", str(out)) == 0
    assert out.read_bytes() == data
    assert home("update", "delete", "--object", "rec1", "--gate", "g2") == 0
    assert home("decrypt", "--key", str(home.tmp / "bob.huap"), "--object", "rec1") == 1
    assert home("reencrypt", "--object", "rec1", "--epoch", "3") == 0
    assert home("reencrypt", "--object", "rec1", "--epoch", "3") == 2
    assert home("decrypt", "--key", str(home.tmp / "alice.huap"), "--object", "rec1", "--out", str(out)) == 0
    assert out.read_bytes() == data
    capsys.readouterr()
    assert home("status", "--object", "rec1") == 0
    assert "epoch 3" in capsys.readouterr().out


def test_sweep_and_withdraw(home, capsys):
    _setup(home)
    assert home("enc-offline", "--pool", "1") == 0
    src = home.tmp / "x.txt"
    src.write_text("hello")
    assert home("enc-online", "--in", str(src), "--object", "o") == 0
    pol = _write(home.tmp / "p.json", {"gates": [{"clauses": {"role": "doctor", "dept": "*", "shift": "*"},
                                                  "expires_at": 10}]})
    assert home("policy", "--file", pol, "--object", "o") == 0
    assert home("update", "sweep", "--now", "5") == 0
    assert home("decrypt", "--key", str(home.tmp / "alice.huap"), "--object", "o") == 0
    assert home("update", "sweep", "--now", "10") == 0
    capsys.readouterr()
    assert home("decrypt", "--key", str(home.tmp / "alice.huap"), "--object", "o") == 1
    assert "access denied" in capsys.readouterr().err


def test_empty_pool_exit_2(home, capsys):
    _setup(home)
    src = home.tmp / "x.txt"
    src.write_text("hello")
    assert home("enc-online", "--in", str(src), "--object", "o") == 2
    assert capsys.readouterr().err.startswith("error:")


def test_malformed_inputs_exit_2(home):
    assert home("keygen", "--attrs", str(SCEN / "alice.json"), "--out", "k") == 2  # no setup yet
    bad = _write(home.tmp / "u.json", {"attributes": [{"name": "a", "values": []}]})
    assert home("setup", "--universe", bad) == 2
    _setup(home)
    assert home("setup", "--universe", str(SCEN / "universe.json")) == 2  # would overwrite
    bad_attrs = _write(home.tmp / "a.json", {"role": "pilot", "dept": "icu", "shift": "day"})
    assert home("keygen", "--attrs", bad_attrs, "--out", str(home.tmp / "k")) == 2
    junk = home.tmp / "junk.huap"
    junk.write_bytes(b"not a key")
    assert home("decrypt", "--key", str(junk), "--object", "o") == 2
    assert home("decrypt", "--key", str(home.tmp / "alice.huap"), "--object", "missing") == 2
    assert home("policy", "--file", str(SCEN / "policy.json"), "--object", "../evil") == 2


def test_update_needs_args(home):
    with pytest.raises(SystemExit) as exc:
        home("update", "delete", "--object", "o")
    assert exc.value.code == 2


def test_bench_csv_header(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--n", "2", "--ni", "2", "--trials", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "op,n,ni,m,trials,mean_us,stddev_us,EG,EGT,MG,MGT,P,RG"
    assert lines[0].split(",") == CSV_COLUMNS
    assert len(lines) == 1 + 8
    assert main(["bench", "--n", "2", "--ni", "2", "--trials", "1", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mismatches"] == [] and len(doc["rows"]) == 8


def test_scenario_command(tmp_path, capsys):
    tr = tmp_path / "t.jsonl"
    assert main(["scenario", "--script", str(SCEN / "bsn.json"), "--store", str(tmp_path / "s"),
                 "--transcript", str(tr)]) == 0
    out = capsys.readouterr().out
    lines = [line.split() for line in out.splitlines()]
    assert ["alice", "patient-17:", "granted", "(epoch", "1)"] in lines
    assert ["bob", "patient-17:", "denied", "(epoch", "1)"] in lines
    assert tr.read_text().count("\n") > 20


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "huap", "--home", str(tmp_path), "status"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "huap", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "scenario" in proc.stdout
