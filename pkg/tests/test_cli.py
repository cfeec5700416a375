import json
from pathlib import Path

import pytest

from nbart.cli import main

ROOT = Path(__file__).resolve().parent.parent
SCEN = ROOT / "scenarios"

SMALL = """
[scenario]
name = tiny
[params]
n_p = 3
n_c = 2
f_p = 1
f_c = 1
b = 2
[value]
text = hello, world
[byzantine]
p1 = EQUIVOCATE
[schedule]
policies = fifo uniform-random
seeds = 0..2
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_writes_report_and_traces(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", write(tmp_path, SMALL), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["runs"] == report["passed"] == 6
    assert len((out / "runs.jsonl").read_text().splitlines()) == 6
    assert len(list((out / "traces").iterdir())) == 6
    assert "6/6" in capsys.readouterr().out


def test_run_is_byte_identical(tmp_path):
    s = write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["run", "--scenario", s, "--out", str(tmp_path / d)]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_invalid_input_exits_2(tmp_path, capsys):
    s = write(tmp_path, SMALL.replace("f_p = 1", "f_p = 2"))
    assert main(["run", "--scenario", s, "--out", str(tmp_path / "o")]) == 2
    assert "invalid input" in capsys.readouterr().err
    s = write(tmp_path, SMALL + "[bogus]\n")
    assert main(["run", "--scenario", s, "--out", str(tmp_path / "o")]) == 2


def test_expect_failure(tmp_path):
    s = write(tmp_path, SMALL)
    assert main(["run", "--scenario", s, "--out", str(tmp_path / "o"), "--expect-failure", "--traces", "none"]) == 1
    assert main(["run", "--scenario", str(SCEN / "boundary.ini"), "--out", str(tmp_path / "b"),
                 "--traces", "failures"]) == 0
    report = json.loads((tmp_path / "b" / "report.json").read_text())
    assert report["first_failure"] is not None


def test_several_scenarios_get_subdirectories(tmp_path):
    a = write(tmp_path, SMALL, "a.ini")
    b = write(tmp_path, SMALL.replace("name = tiny", "name = other"), "b.ini")
    assert main(["run", "--scenario", a, "--scenario", b, "--out", str(tmp_path / "o"), "--traces", "none"]) == 0
    assert (tmp_path / "o" / "tiny" / "report.json").exists()
    assert (tmp_path / "o" / "other" / "report.json").exists()


def test_seed_override(tmp_path):
    s = write(tmp_path, SMALL)
    assert main(["run", "--scenario", s, "--out", str(tmp_path / "o"), "--seeds", "5", "--traces", "none"]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["runs"] == 2


def test_complexity_grid(tmp_path):
    assert main(["complexity", "--scenario", str(SCEN / "complexity_grid.ini"), "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "complexity.json").read_text())
    assert all(r["bits_ratio"] == 1.0 for r in rows)


def test_game_needs_coalitions(tmp_path, capsys):
    text = SMALL.replace("p1 = EQUIVOCATE", "").replace("[byzantine]\n", "")
    s = write(tmp_path, text.replace("n_p = 3", "n_p = 5").replace("n_c = 2", "n_c = 3"))
    assert main(["game", "--scenario", s, "--out", str(tmp_path / "g")]) == 2
    assert "coalitions" in capsys.readouterr().err


def test_validate_quick_and_mutation(tmp_path):
    assert main(["validate", "--out", str(tmp_path / "v"), "--seeds", "0..1"]) == 0
    assert "PASS single_consume" in (tmp_path / "v" / "conformance.txt").read_text()
    assert main(["validate", "--out", str(tmp_path / "m"), "--seeds", "0", "--mutation", "skip_decode",
                 "--expect-failure"]) == 0
    assert (tmp_path / "m" / "witness" / "single_consume.trace").exists()
    assert main(["validate", "--out", str(tmp_path / "x"), "--mutation", "nope"]) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
