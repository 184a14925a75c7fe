"""Command-line smoke tests driving main(argv) end to end."""
from __future__ import annotations

import json

import pytest

from isingsat.cli import main
from isingsat.cnf import parse_dimacs
from isingsat.harness import load_records


def test_generate_semiprime(tmp_path, capsys):
    out = tmp_path / "t4.cnf"
    assert main(["generate", "--bits", "4", "-o", str(out)]) == 0
    cnf = parse_dimacs(out.read_text())
    assert cnf.num_vars == 18
    assert "9 = 3*3" in capsys.readouterr().out


def test_generate_whole_catalog(tmp_path):
    assert main(["generate", "--bits", "7", "--all",
                 "--dir", str(tmp_path / "cat")]) == 0
    files = sorted(p.name for p in (tmp_path / "cat").glob("*.cnf"))
    assert files and all(f.startswith("semiprime-07-") for f in files)


def test_generate_backbone(tmp_path):
    out = tmp_path / "bb.cnf"
    assert main(["generate", "--backbone", "14", "56", "50", "--force",
                 "--seed", "3", "-o", str(out)]) == 0
    cnf = parse_dimacs(out.read_text())
    assert (cnf.num_vars, cnf.num_clauses) == (14, 56)


def test_generate_needs_a_mode(capsys):
    assert main(["generate"]) == 2
    assert "--bits or --backbone" in capsys.readouterr().err


def test_preprocess_writes_all_artifacts(tmp_path):
    src = tmp_path / "in.cnf"
    main(["generate", "--bits", "5", "-o", str(src)])
    out = tmp_path / "out.cnf"
    cond = tmp_path / "cond.json"
    report = tmp_path / "report.json"
    assert main(["preprocess", "-i", str(src), "--level", "7",
                 "-o", str(out), "--cond", str(cond),
                 "--report", str(report)]) == 0
    residual = parse_dimacs(out.read_text())
    assert residual.num_clauses == 0  # 5-bit fully reduces
    rows = json.loads(cond.read_text())
    assert {r["kind"] for r in rows} <= {"fix", "sub", "pure"}
    assert any(r["kind"] == "fix" for r in rows)
    stats = json.loads(report.read_text())
    assert stats[-1]["vars_remaining"] == 0
    assert all("wall_time" in row for row in stats)


def test_solve_and_tts_and_report(tmp_path, capsys):
    runs = tmp_path / "runs.jsonl"
    assert main(["solve", "--instance", "semiprime:4", "--level", "7",
                 "--repeats", "2", "--cap", "200",
                 "-o", str(runs)]) == 0
    recs = load_records(runs)
    assert len(recs) == 2 and all(r.solved for r in recs)
    out = capsys.readouterr().out
    assert "2/2 repeats solved" in out

    assert main(["tts", "-i", str(runs)]) == 0
    table = capsys.readouterr().out
    assert "semiprime-04-9" in table and "1.00" in table

    agg = tmp_path / "aggregates.csv"
    assert main(["report", "-i", str(runs), "-o", str(agg)]) == 0
    assert agg.exists()
    assert (tmp_path / "plotdata" / "runtime_by_level.csv").exists()


def test_solve_from_dimacs_file_with_trace(tmp_path):
    src = tmp_path / "in.cnf"
    main(["generate", "--bits", "4", "-o", str(src)])
    runs = tmp_path / "runs.jsonl"
    trace = tmp_path / "trace.csv"
    assert main(["solve", "-i", str(src), "--level", "0", "--repeats", "1",
                 "--cap", "300", "-o", str(runs), "--trace", str(trace)]) == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "sweep,temperature,best_energy"
    assert len(lines) > 1


def test_solve_sweep_config(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "instances": ["semiprime:4"], "levels": [7], "repeats": 2,
        "cap": 200, "stop_on_solve": True,
    }))
    runs = tmp_path / "runs.jsonl"
    assert main(["solve", "--sweep", str(cfg), "-o", str(runs)]) == 0
    assert len(load_records(runs)) >= 1


def test_solve_needs_an_input(capsys):
    assert main(["solve"]) == 2
    assert "solve needs" in capsys.readouterr().err


def test_tts_empty_file(tmp_path, capsys):
    empty = tmp_path / "runs.jsonl"
    empty.write_text("")
    assert main(["tts", "-i", str(empty)]) == 1
    assert main(["report", "-i", str(empty)]) == 1


def test_bench_reports_both_kernels(capsys):
    assert main(["bench", "--spins", "20", "--sweeps", "60",
                 "--samples", "4"]) == 0
    out = capsys.readouterr().out
    assert "pure" in out and ("compiled" in out or "unavailable" in out)


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
