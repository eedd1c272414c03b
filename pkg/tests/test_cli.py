import json
import subprocess
import sys

import pytest

from biharm import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, [json.loads(line) for line in out.splitlines()], err


def test_parse_flags():
    cfg = cli.parse_config(["kernel", "--dim", "2", "--eta-max", "20"])
    assert cfg["subcommand"] == "kernel" and cfg["dim"] == 2 and cfg["eta_max"] == 20.0


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# a comment\ntheta = 0.5\nnodes=300  # trailing\n")
    cfg = cli.parse_config(["simulate", "--config", str(path), "--theta", "1.0"])
    assert cfg["theta"] == 1.0 and cfg["nodes"] == 300


def test_bad_values_name_the_key(capsys, tmp_path):
    assert cli.main(["kernel", "--dim", "-1"]) == 2
    assert "dim" in capsys.readouterr().err
    assert cli.main(["kernel", "--dim", "two"]) == 2
    assert "dim" in capsys.readouterr().err
    path = tmp_path / "bad.cfg"
    path.write_text("wobble=3\n")
    assert cli.main(["simulate", "--config", str(path)]) == 2
    assert "wobble" in capsys.readouterr().err
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("BIHARM_THREADS", "zero")
    assert cli.main(["geom", "--dim", "3"]) == 2
    assert "BIHARM_THREADS" in capsys.readouterr().err


def test_conservation_report_and_exit_zero(capsys):
    code, lines, _ = run(["probe", "conservation", "--r-max", "30", "--nodes", "1200"], capsys)
    assert code == 0
    rec = lines[0]
    assert rec["check"] == "conservation" and rec["pass"] is True
    assert rec["config"]["check"] == "conservation" and rec["config"]["nodes"] == 1200


def test_failed_check_exit_one(capsys):
    code, lines, _ = run(["probe", "linfty", "--r-max", "30", "--nodes", "400", "--bound", "0.5"],
                         capsys)
    assert code == 1 and lines[0]["pass"] is False


def test_unwritable_output_exit_three(capsys, tmp_path):
    code = cli.main(["geom", "--dim", "3", "--out", str(tmp_path / "no" / "such" / "dir.csv")])
    assert code == 3
    assert "dir.csv" in capsys.readouterr().err


def test_seventeen_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert cli.to_json({"a": 1 / 3, "b": [True, None], "c": float("nan")}) == \
        '{"a":0.33333333333333331,"b":[true,null],"c":null}'


def test_counterexample_outputs_deterministic(tmp_path, capsys):
    paths = []
    for k in range(2):
        csv, series = tmp_path / "ce.csv", tmp_path / "ce.jsonl"
        code = cli.main(["counterexample", "--nodes", "1000", "--out", str(csv),
                         "--series", str(series)])
        assert code == 0
        paths.append((csv.read_bytes(), series.read_bytes(), capsys.readouterr().out))
    assert paths[0] == paths[1]
    header = paths[0][0].decode().splitlines()[0]
    assert header == "r,F,lapF,bilapF"
    first = json.loads(paths[0][1].decode().splitlines()[0])
    assert set(first) == {"t", "linf"}


def test_simulate_outputs(tmp_path, capsys):
    csv, series = tmp_path / "s.csv", tmp_path / "s.jsonl"
    code = cli.main(["simulate", "--r-max", "10", "--nodes", "200", "--t-end", "0.05",
                     "--samples", "1", "--out", str(csv), "--series", str(series)])
    assert code == 0
    assert csv.read_text().splitlines()[0] == "t,r,u"
    rec = json.loads(series.read_text().splitlines()[1])
    assert list(rec) == ["step", "t", "mass", "l2", "linf"]
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] is True and report["config"]["t_end"] == 0.05


def test_distlike_csv(tmp_path, capsys):
    csv = tmp_path / "d.csv"
    assert cli.main(["distlike", "--R", "10", "--out", str(csv)]) == 0
    assert csv.read_text().splitlines()[0] == "r,h,f,df,lapf,phi"


def test_weights_horizon_is_config_error(capsys):
    assert cli.main(["weights", "--variant", "kernel", "--T", "50"]) == 2
    assert "horizon" in capsys.readouterr().err


def test_suite_subset(capsys):
    code, lines, _ = run(["suite", "--only", "8"], capsys)
    assert code == 0 and lines[0]["criterion"] == 8
    assert "seconds" not in lines[0]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biharm", "geom", "--dim", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["check"] == "geometry"
