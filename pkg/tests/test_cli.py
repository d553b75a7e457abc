import csv
import json

import numpy as np

from cstrid.cli import main
from cstrid.sim import CSV_COLUMNS, read_csv


def test_schema(capsys):
    assert main(["schema"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# ")
    assert lines[1:] == CSV_COLUMNS


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--horizon", "0.5", "--set", "gains.gamma_a=900", "--out", str(out)]) == 0
    rec = read_csv(out / "run.csv")
    assert len(rec) == 51 and rec.columns == CSV_COLUMNS
    summary = json.loads((out / "summary.json").read_text())
    assert summary["final_time"] == 0.5 and summary["steps"] > 0
    assert "gains.gamma_a = 900.0" in (out / "scenario.cfg").read_text()
    assert "th5" in capsys.readouterr().out


def test_run_with_config_file(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("run.horizon = 0.2\nrun.output_interval = 0.05\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--no-ideal", "--out", str(out)]) == 0
    rec = read_csv(out / "run.csv")
    np.testing.assert_allclose(rec.t, [0, 0.05, 0.1, 0.15, 0.2])


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sw"
    code = main(["sweep", "--horizon", "0.2", "--sweep", "k0_error=-0.1,0.1", "--out", str(out)])
    assert code == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["value"]) for r in rows] == [-0.1, 0.1]
    assert len(list(out.glob("run_*.csv"))) == 2
    assert "k0_error=-0.1" in capsys.readouterr().out


def test_sweep_reports_failed_member(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--horizon", "0.1", "--sweep", "gamma_b=-400,10", "--out", str(out)]) == 1


def test_bad_override_is_an_error(tmp_path, capsys):
    assert main(["run", "--set", "gains.M=1", "--out", str(tmp_path)]) == 2
    assert "M must satisfy" in capsys.readouterr().err


def test_check_subset(capsys):
    assert main(["check", "--only", "5,10"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]  5" in out and "[PASS] 10" in out and "2/2 checks passed" in out
