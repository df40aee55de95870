import csv
import json

import pytest

from main import OUTPUT_DIR_ENV, main


@pytest.fixture(autouse=True)
def workspace(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    return tmp_path


def read_rows(path):
    with open(path, newline='') as f:
        lines = f.read().splitlines()
    assert lines[0].startswith("# config: ")
    return list(csv.reader(lines[1:]))


def test_exact_complete_writes_csv(workspace, capsys):
    out = workspace / "exact.csv"
    assert main(["exact", "--n", "3", "--output", str(out)]) == 0
    assert "E[U]=0.370370" in capsys.readouterr().out
    rows = read_rows(out)
    assert rows[0] == ["n", "expected_unvisited"]
    assert len(rows) == 4
    assert float(rows[-1][1]) == pytest.approx(10 / 27)


def test_exact_config_row_records_settings(workspace):
    out = workspace / "exact.csv"
    main(["exact", "--family", "path", "--n", "5", "--seed", "7", "--output", str(out)])
    config = json.loads(out.read_text().splitlines()[0][len("# config: "):])
    assert config["seed"] == 7
    assert config["family"] == "path"
    assert config["walk"] == "lazy_simple"


def test_output_to_stdout(capsys):
    assert main(["exact", "--n", "3", "--output", "-", "--quiet"]) == 0
    captured = capsys.readouterr()
    assert captured.out.splitlines()[1] == "n,expected_unvisited"
    assert "E[U]=" in captured.err
    assert "E[U]=" not in captured.out


def test_output_dir_from_environment(workspace, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(workspace / "results"))
    assert main(["exact", "--n", "4", "--miss"]) == 0
    rows = read_rows(workspace / "results" / "exact.csv")
    assert len(rows) == 5
    assert float(rows[1][1]) == 0.0


def test_exact_trajectory(workspace):
    out = workspace / "trajectory.csv"
    assert main(["exact", "--family", "path", "--n", "3", "--trajectory", "--output", str(out)]) == 0
    assert len(read_rows(out)) == 10


def test_dense_cap_exceeded():
    assert main(["exact", "--family", "path", "--n", "50", "--dense-cap", "10"]) == 2


def test_exact_has_no_monte_carlo_engine():
    assert main(["exact", "--n", "3", "--engine", "mc"]) == 2


def test_missing_n():
    assert main(["exact"]) == 2


def test_unknown_flag():
    assert main(["exact", "--n", "3", "--bogus"]) == 2


def test_walk_family_mismatch():
    assert main(["exact", "--family", "path", "--walk", "uniform", "--n", "4"]) == 2


def test_custom_family_needs_edges():
    assert main(["exact", "--family", "custom", "--n", "3"]) == 2


def test_custom_family(workspace, edge_file, capsys):
    path = edge_file([(1, 2), (2, 3), (1, 3), (3, 4)])
    assert main(["exact", "--family", "custom", "--edges", path, "--n", "4"]) == 0
    assert "E[U]=" in capsys.readouterr().out


def test_config_file_overrides_defaults(workspace):
    (workspace / "config.json").write_text(json.dumps({"trials": 5, "seed": 3}))
    out = workspace / "trials.csv"
    assert main(["simulate", "--family", "path", "--n", "6", "--per-trial",
                 "--output", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 6


def test_flag_overrides_config_file(workspace):
    (workspace / "config.json").write_text(json.dumps({"trials": 5}))
    out = workspace / "trials.csv"
    main(["simulate", "--n", "6", "--trials", "8", "--per-trial", "--output", str(out)])
    assert len(read_rows(out)) == 9


def test_bad_config_value(workspace):
    (workspace / "config.json").write_text(json.dumps({"trials": 0}))
    assert main(["simulate", "--n", "4"]) == 2


def test_unreadable_config(workspace):
    (workspace / "broken.json").write_text("{trials")
    assert main(["simulate", "--n", "4", "--config", str(workspace / "broken.json")]) == 2


def test_simulate_is_reproducible(workspace):
    a, b = workspace / "a.csv", workspace / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--family", "lollipop", "--n", "8", "--trials", "50",
                     "--seed", "4", "--output", str(out)]) == 0
    assert read_rows(a) == read_rows(b)


def test_simulate_cover(workspace, capsys):
    out = workspace / "cover.csv"
    assert main(["simulate", "--cover", "--family", "path", "--n", "5", "--trials", "50",
                 "--output", str(out)]) == 0
    assert "t_cov~" in capsys.readouterr().out
    assert read_rows(out)[0][0] == "start"


def test_analyze_with_checks(workspace):
    out = workspace / "analyze.csv"
    assert main(["analyze", "--family", "path", "--ladder", "4,8", "--checks",
                 "--output", str(out)]) == 0
    assert len(read_rows(out)) == 3
    checks = read_rows(workspace / "analyze_checks.csv")
    assert checks[0] == ["n", "check", "ok", "lhs", "rhs", "detail"]
    assert all(row[2] == "True" for row in checks[1:])


def test_analyze_dump_kernels(workspace):
    assert main(["analyze", "--n", "3", "--walk", "simple",
                 "--dump-kernels", str(workspace / "kernels")]) == 0
    assert (workspace / "kernels" / "kernel_3.csv").exists()


def test_theorem_list(capsys):
    assert main(["theorem", "--list"]) == 0
    out = capsys.readouterr().out
    assert "T1.1-1" in out
    assert "X-below-hit" in out


def test_theorem_unknown_id():
    assert main(["theorem", "T9.9"]) == 2


def test_theorem_needs_id():
    assert main(["theorem"]) == 2


def test_theorem_certificate(workspace, capsys):
    out = workspace / "theorem.csv"
    assert main(["theorem", "T1.1-1", "--ladder", "10,100", "--output", str(out)]) == 0
    captured = capsys.readouterr()
    assert "T1.1-1: pass" in captured.out
    assert "CERTIFICATE SUMMARY" in captured.out
    rows = read_rows(out)
    assert rows[0][-1] == "verdict"
    assert all(row[-1] == "pass" for row in rows[1:])


def test_theorem_violated_hypothesis_exits_two(workspace, capsys):
    out = workspace / "theorem.csv"
    assert main(["theorem", "T1.2-1", "--C", "0.5", "--n", "8", "--output", str(out)]) == 2
    captured = capsys.readouterr()
    assert "T1.2-1: inapplicable" in captured.out
    assert "hypothesis violated: C > 1" in captured.err
    assert read_rows(out)[-1][1] == "hypothesis:C > 1"


def test_theorem_param_flag(capsys):
    assert main(["theorem", "T1.1-4", "--param", "c=2", "--ladder", "10,100"]) == 0
    assert "T1.1-4: pass" in capsys.readouterr().out


def test_sweep_complete(workspace, capsys):
    out = workspace / "sweep.csv"
    assert main(["sweep", "--family", "complete", "--walk", "uniform", "--gammas", "0.5",
                 "--ladder", "10,100,1000,10000", "--output", str(out)]) == 0
    assert "gamma=0.5: exponent=" in capsys.readouterr().out
    assert len(read_rows(out)) == 5


def test_sweep_needs_four_points():
    assert main(["sweep", "--family", "complete", "--walk", "uniform",
                 "--ladder", "10,100"]) == 2
