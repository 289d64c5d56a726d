import csv
import json

import pytest

from shadowtomo import __version__
from shadowtomo.cli import ExperimentConfig, main
from shadowtomo.fermion import enumerate_kbody
from shadowtomo.pauli import enumerate_local


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_learn_all_pauli_rows_and_reproducibility(tmp_path, capsys):
    args = ["learn", "--task", "all-pauli", "--n", "3", "--epsilon", "0.4", "--seed", "7"]
    assert _run(args + ["--out", str(tmp_path / "a")], capsys)[0] == 0
    assert _run(args + ["--out", str(tmp_path / "b")], capsys)[0] == 0
    for ext in (".json", ".csv"):
        assert (tmp_path / ("a" + ext)).read_bytes() == (tmp_path / ("b" + ext)).read_bytes()
    rows = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert len(rows) == 64
    assert set(rows[0]) == {"operator", "estimate", "exact_value", "error"}
    report = json.loads((tmp_path / "a.json").read_text())
    assert report["version"] == __version__
    assert report["config_hash"] == ExperimentConfig.resolve({}, report["config"]).digest()
    assert report["report"]["max_error"] <= 0.4


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"task": "local-pauli", "n": 3, "k": 1, "epsilon": 0.5, "seed": 3}))
    code, out, _ = _run(["learn", "--config", str(cfg), "--epsilon", "0.45"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["config"]["epsilon"] == 0.45
    assert report["config"]["task"] == "local-pauli"
    assert report["rows"] == 9


def test_usage_errors_name_the_field(tmp_path, capsys):
    code, _, err = _run(["learn", "--epsilon", "1.5", "--n", "2"], capsys)
    assert code == 2 and "config.epsilon" in err
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"epsilonn": 0.3}))
    code, _, err = _run(["learn", "--config", str(cfg)], capsys)
    assert code == 2 and "config.epsilonn" in err
    code, _, err = _run(["learn", "--task", "fermionic"], capsys)
    assert code == 2 and "config.n_modes" in err


def test_color_pauli_file(tmp_path, capsys):
    f = tmp_path / "ops.txt"
    f.write_text("\n".join(p.label for p in enumerate_local(3, 2)))
    code, out, _ = _run(["color", str(f), "--engine", "gyarfas"], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["proper"] and rec["properness_checked"]
    assert len(rec["colors"]) == 27 and rec["num_colors"] == max(rec["colors"]) + 1


def test_color_kbody_file(tmp_path, capsys):
    f = tmp_path / "ops.txt"
    f.write_text("\n".join(str(m) for m in enumerate_kbody(3, 2)))
    code, out, _ = _run(["color", str(f), "--engine", "kbody", "--samples", "500"], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["proper"] and rec["size_chi"] >= 1
    assert rec["sample_stats"]["samples"] == 500


def test_compress_then_query(tmp_path, capsys):
    prefix = str(tmp_path / "rec")
    code, _, _ = _run(["compress", "--task", "local-pauli", "--n", "3", "--k", "1", "--epsilon", "0.4",
                       "--state", "ghz n=3", "--out", prefix], capsys)
    assert code == 0
    info = json.loads(open(prefix + ".json").read())
    assert info["roundtrip_ok"] and info["bits"] == 8 * info["bytes"]
    code, out, _ = _run(["query", prefix + ".stdr", "--pauli", "ZZZ"], capsys)
    rec = json.loads(out)
    assert code == 0 and set(rec) == {"estimate", "in_s_eps", "extrapolated"}
    assert rec["extrapolated"]


def test_greens_exact_only(tmp_path, capsys):
    h = tmp_path / "h.txt"
    h.write_text("G[1,2]*0.5\nG[3,4]*-0.25\n")
    code, out, _ = _run(["greens", str(h), "--q", "1", "--exact-only", "--mapping", "jw",
                         "--state", "product 01"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "a,b,real,imag,exact_real,exact_imag"
    assert len([ln for ln in lines if ln[:1].isdigit()]) == 16


def test_greens_learned(tmp_path, capsys):
    h = tmp_path / "h.txt"
    h.write_text("G[1,2]*0.5\nG[1,3]*-0.25\n")
    prefix = str(tmp_path / "g")
    code, _, _ = _run(["greens", str(h), "--q", "1", "--epsilon", "0.3", "--mapping", "jw",
                       "--n-modes", "2", "--out", prefix], capsys)
    assert code == 0
    report = json.loads(open(prefix + ".json").read())
    assert report["audits"]["max_error"] <= 0.3


def test_bench_table_is_ordered_and_deterministic(capsys):
    args = ["bench", "--task", "fermionic", "--k", "1", "--n-modes", "2..3", "--epsilon", "0.4",
            "--trials", "2", "--workers", "2", "--mapping", "jw"]
    code, out1, _ = _run(args, capsys)
    code2, out2, _ = _run(args[:-4] + ["--workers", "1", "--mapping", "jw"], capsys)
    assert code == code2 == 0
    table1 = out1.split("{")[0]
    assert table1 == out2.split("{")[0]
    rows = list(csv.reader(table1.splitlines()))[1:]
    assert [(r[0], r[1]) for r in rows] == [("2", "0"), ("2", "1"), ("3", "0"), ("3", "1")]


def test_selftest_subset(capsys):
    code, out, _ = _run(["selftest", "--only", "1"], capsys)
    assert code == 0
    assert "PASS" in out and "1/1 criteria passed" in out
