import csv
import json
import subprocess
import sys

import pytest

from minuet import __version__
from minuet.cli import main


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_run_smoke_writes_artifacts(tmp_path, capsys):
    assert main(["run", "smoke", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "monitored" in out and "M1" in out and "F1" in out
    csvs = list(tmp_path.glob("*.csv"))
    assert len(csvs) >= 7
    assert (tmp_path / "smoke_dca_like.simlog").exists()
    assert (tmp_path / "smoke_dca_like_M1_MP_r.csv").exists()
    with open(tmp_path / "smoke_dca_like_summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:5] == ["event", "strategy", "MP_g", "S", "R_percent"]
    assert {r[0] for r in rows[1:]} == {"M1", "F1"}
    with open(tmp_path / "smoke_dca_like_F1_n_vd.csv") as fh:
        series_rows = list(csv.reader(fh))
    assert series_rows[0] == ["t", "value"] and len(series_rows) == 301
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["version"] == __version__ and m["seed"] == 1 and len(m["scenario_hash"]) == 16
    assert "time" not in json.dumps(m)


def test_run_twice_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scenario", "smoke", "--strategy", "pctt_like", "--seed", "7", "--out", str(a)]) == 0
    assert main(["run", "smoke", "--strategy", "pctt_like", "--seed", "7", "--out", str(b)]) == 0
    assert _files(a) == _files(b)


def test_metric_flags_change_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "smoke", "--out", str(a)])
    main(["run", "smoke", "--out", str(b), "--eq7-literal", "--per-unique-delay"])
    sa = (a / "smoke_dca_like_summary.csv").read_text()
    sb = (b / "smoke_dca_like_summary.csv").read_text()
    assert sa != sb
    assert json.loads((b / "manifest.json").read_text())["eq7_literal"] is True


def test_compare_clique_two_rows(tmp_path):
    assert main(["compare", "clique", "--strategies", "dca_like", "pctt_like", "--seeds", "1", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "clique_comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["strategy"] for r in rows] == ["dca_like", "pctt_like"]
    assert "R_percent_mean" in rows[0]
    assert (tmp_path / "dca_like_s1" / "clique_dca_like.simlog").exists()
    assert (tmp_path / "clique_orderings.txt").exists()


def test_compare_independent_of_worker_count(tmp_path):
    args = ["compare", "smoke", "--seeds", "1", "2"]
    assert main(args + ["--out", str(tmp_path / "serial"), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(tmp_path / "pool"), "--jobs", "2"]) == 0
    assert _files(tmp_path / "serial") == _files(tmp_path / "pool")


def test_compare_needs_two_strategies(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["compare", "smoke", "--strategies", "dca_like", "--out", str(tmp_path)])
    assert info.value.code != 0


def test_errors_give_nonzero_exit(tmp_path, capsys):
    assert main(["run", "no_such_scenario", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("duration_s: 10\nbounds: [0, 0, 10, 10]\nwhat: 1\n")
    assert main(["validate", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "what: unknown key" in err and "mobility: required" in err
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "smoke", "--out", str(blocker / "sub")]) == 1
    with pytest.raises(SystemExit):
        main(["run"])


def test_validate_dump_roundtrips(tmp_path, capsys):
    assert main(["validate", "paper_ld", "--dump"]) == 0
    text = capsys.readouterr().out
    f = tmp_path / "ld.yaml"
    f.write_text(text)
    assert main(["validate", str(f)]) == 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "minuet", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
