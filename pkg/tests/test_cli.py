import csv

from rsutrust.cli import main


def test_validate_ok(capsys):
    assert main(["validate", "--preset", "desk"]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_problems(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("mr = 1.5\nmv = 2\n")
    assert main(["validate", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "mr" in err and "mv" in err


def test_bad_override(capsys):
    assert main(["validate", "--set", "mr"]) == 2
    assert main(["validate", "--set", "n_rsus=lots"]) == 2


def test_run_writes_files(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--preset", "desk", "--set", "sim_duration=60", "--set", "mr=0.4", "--seed", "2",
                 "--out", str(out)])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"config.ini", "metrics.csv", "series.csv", "windows.csv",
                                               "counters.csv"}
    assert "seed 2" in capsys.readouterr().out


def test_run_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RSUTRUST_OUT", str(tmp_path / "env"))
    assert main(["run", "--set", "sim_duration=30", "--format", "jsonl"]) == 0
    assert (tmp_path / "env" / "metrics.jsonl").exists()


def test_sweep_single_seed(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--set", "sim_duration=30", "--mr", "0.2", "--mv", "0.1,0.2", "--seeds", "1",
                 "--workers", "1", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    pdr = [r for r in rows if r["metric"] == "pdr"]
    assert len(pdr) == 2
    assert all("ci_omitted" in r["note"] and r["ci95_lo"] == "" for r in pdr)


def test_oracle_verb(capsys):
    assert main(["oracle", "--cases", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10 and all(line.startswith("PASS") for line in lines)
