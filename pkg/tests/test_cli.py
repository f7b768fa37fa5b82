import csv
import json
from pathlib import Path

import pytest

from crerk.bench import RunConfig
from crerk.cli import _join_ranges, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_solve_writes_trajectory(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code = main(["solve", "--method", "imsverk24", "--problem", "duffing", "--t-end", "1",
                 "--h", "2^-5", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "y0", "y1"] and len(rows) == 34
    assert float(rows[-1][0]) == 1.0
    assert "32 steps" in capsys.readouterr().out


def test_solve_stage_solver_failure_exit_code(tmp_path, capsys):
    code = main(["solve", "--method", "immverk12", "--problem", "sine-gordon", "--t-end", "1",
                 "--h", "1/16", "--stage-solver", "pure", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    err = capsys.readouterr().err
    assert "stage iteration" in err and "step 0" in err


def test_solve_bad_grid(tmp_path, capsys):
    code = main(["solve", "--method", "imsverk1", "--problem", "henon-heiles", "--t-end", "1",
                 "--h", "0.3", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    assert "not a positive integer" in capsys.readouterr().err


def test_converge_flags(tmp_path):
    code = main(["converge", "--methods", "imsverk12,imerk24", "--problem", "henon-heiles",
                 "--t-end", "10", "--h-list", "2^-2,2^-3,2^-4", "--repeats", "1",
                 "--out", str(tmp_path)])
    assert code == 0
    side = json.loads((tmp_path / "imerk24_henon-heiles_convergence.json").read_text())
    assert side["pass"] is True and 3.65 <= side["slope"] <= 4.35
    assert (tmp_path / "imsverk12_henon-heiles_errors.csv").read_text().startswith("h,ge\n")


def test_converge_failing_band_exit_code(tmp_path):
    # two coarse Duffing stepsizes are far from the asymptotic regime
    code = main(["converge", "--methods", "immverk12", "--problem", "duffing", "--t-end", "10",
                 "--h-list", "2^-4,2^-5", "--repeats", "1", "--out", str(tmp_path)])
    assert code == 1


def test_converge_with_config_and_override(tmp_path):
    code = main(["converge", "--config", str(CONFIGS / "duffing_convergence.ini"),
                 "--methods", "imsverk1", "--h-list", "2^-6,2^-7", "--repeats", "1",
                 "--out", str(tmp_path)])
    assert code == 0
    side = json.loads((tmp_path / "imsverk1_duffing_convergence.json").read_text())
    assert side["band"] == [0.8, 1.3]


def test_converge_missing_arguments():
    with pytest.raises(SystemExit):
        main(["converge", "--methods", "imsverk1"])


def test_energy(tmp_path):
    code = main(["energy", "--method", "imsverk1", "--problem", "henon-heiles", "--t-end", "10",
                 "--h", "1/30", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "imsverk1_henon-heiles_energy.csv").read_text().splitlines()
    assert lines[0] == "t,rgeh" and lines[1] == "0,0" and len(lines) == 302


def test_stability_negative_ranges(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["stability", "--method", "immverk24", "--k1", "-10:10:5", "--k2", "-2:2:3",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["k1", "k2", "absR"] and len(rows) == 16
    assert rows[1][:2] == ["-10", "-2"]


def test_stability_bad_range(tmp_path, capsys):
    code = main(["stability", "--method", "imsverk1", "--k1", "0:1:1", "--out", str(tmp_path / "r.csv")])
    assert code == 2


def test_join_ranges():
    assert _join_ranges(["--k1", "-1:1:3", "--out", "x"]) == ["--k1=-1:1:3", "--out", "x"]


@pytest.mark.parametrize("kind,method,expected", [
    ("order", "imsverk24", 0), ("order", "imsverk12", 0),
    ("symplectic", "imsverk1", 0), ("symplectic", "immverk12", 1),
    ("linear", "imerk24", 0), ("linear", "eeuler", 0),
])
def test_check_records(tmp_path, kind, method, expected):
    out = tmp_path / "c.json"
    assert main(["check", kind, "--method", method, "--out", str(out)]) == expected
    rec = json.loads(out.read_text())
    assert set(rec) == {"scheme", "check", "residuals", "pass"}
    assert rec["scheme"] == method and rec["check"] == kind
    assert rec["pass"] is (expected == 0) and len(rec["residuals"]) >= 1


def test_check_order_residual_count(tmp_path):
    out = tmp_path / "c.json"
    main(["check", "order", "--method", "immverk24", "--out", str(out)])
    assert len(json.loads(out.read_text())["residuals"]) == 8


def test_check_seeded_symplectic_point(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["check", "symplectic", "--method", "imsverk1", "--problem", "duffing", "--h", "0.1"]
    assert main(args + ["--seed", "4", "--out", str(a)]) == 0
    assert main(args + ["--seed", "4", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = RunConfig.from_ini(path)
    assert cfg.schemes and cfg.stepsizes
