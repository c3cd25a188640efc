from __future__ import annotations

import json

from osow.cli import main
from osow.io import parse_instance, read_csv

NOT_SO = {
    # the published table with arrivals relabeled as (2, 3, 1): no longer SO on arrival order
    "resources": [{"index": 1}],
    "arrivals": [{"t": 1}, {"t": 2}, {"t": 3}],
    "configurations": [{"id": "c2", "t": 1, "R": [1]}, {"id": "c3", "t": 2, "R": [1]}, {"id": "c1", "t": 3, "R": [1]}],
    "objectives": {
        "1": {
            "family": "table",
            "table": [
                [[], "0"], [["c1"], "1"], [["c2"], "1"], [["c3"], "1"],
                [["c1", "c2"], "1"], [["c2", "c3"], "1"], [["c1", "c3"], "2"], [["c1", "c2", "c3"], "2"],
            ],
        }
    },
}


def test_gen_fixture(capsys):
    assert main(["gen", "--fixture", "sr-ex"]) == 0
    inst = parse_instance(capsys.readouterr().out)
    assert len(inst.N) == 3


def test_gen_family_then_run(tmp_path, capsys):
    assert main(["gen", "--family", "adwords", "--resources", "2", "-T", "3", "--seed", "4"]) == 0
    path = tmp_path / "g.json"
    path.write_text(capsys.readouterr().out)
    out = tmp_path / "r.csv"
    assert main(["run", str(path), "--output", str(out)]) == 0
    (row,) = read_csv(out.read_text(), boolean=["checks_ok"])
    assert row["family"] == "adwords" and row["checks_ok"] is True


def test_bench_sr_ex(tmp_path, capsys):
    lp = tmp_path / "lp.txt"
    assert main(["bench", "--fixture", "sr-ex", "--dump-lp", str(lp), "--trace"]) == 0
    out = capsys.readouterr().out
    assert "AOPT  5/4" in out and "OPTC  5/4" in out and "arrival,chosen" in out
    assert lp.read_text().startswith("max: ")


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--fixture", "reuse-ex"]) == 0
    assert "witness=({r1t2}, {r1t2,r1t3}, r1t1)" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(NOT_SO))
    assert main(["verify", str(bad)]) == 1
    assert "SO on arrival order: FAILS" in capsys.readouterr().out


def test_reveal_writes_instance(tmp_path, capsys):
    path = tmp_path / "hat.json"
    out = tmp_path / "dom.csv"
    assert main(["reveal", "--fixture", "sr-ex", "--json", str(path), "--output", str(out)]) == 0
    inst = parse_instance(path.read_text())
    assert "hat:1" in inst.by_id and inst.meta["dummy_resource"] == 3
    assert len(read_csv(out.read_text())) == 2


def test_uiid_and_fuzz(tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert main(["uiid", "--dist", "uiid-obm", "--trials", "200", "--output", str(out)]) == 0
    assert "uiid-obm" in capsys.readouterr().out
    assert len(read_csv(out.read_text())) == 200
    assert main(["fuzz", "--trials", "10", "--seed", "2"]) == 0
    assert main(["fuzz", "--trials", "5", "--family", "wholepage"]) == 0


def test_usage_errors(tmp_path, capsys):
    assert main(["run"]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["run", "--fixture", "sr-ex", "--stages", "bogus"]) == 2
    assert main(["bench", "--fixture", "sr-ex", "--cap", "2"]) == 2
