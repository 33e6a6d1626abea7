from __future__ import annotations

import json

import pytest

from pointline.cli import main


def _rows(text: str) -> list[str]:
    """Data rows of a markdown table (skip header and separator)."""
    lines = [l for l in text.splitlines() if l.startswith("|")]
    return lines[2:]


def test_enumerate_two_views(capsys):
    assert main(["enumerate", "--max-views", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 5
    assert all("| 2 |" in r for r in rows)


def test_enumerate_all_views(capsys):
    assert main(["enumerate", "--max-views", "6"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 39


def test_enumerate_beyond_six_adds_nothing(capsys):
    assert main(["enumerate", "--max-views", "8"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 39


def test_enumerate_json(capsys):
    assert main(["enumerate", "--max-views", "6", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["count"] == 39
    assert len(data["problems"]) == 39
    keys = {"label", "m", "pf", "pd", "lf", "la", "alpha", "minimal", "degree"}
    assert keys <= set(data["problems"][0])


def test_check_single_non_minimal(capsys):
    assert main(["check", "--problem", "1016_6"]) == 0
    out = capsys.readouterr().out
    assert "1016_6" in out
    assert "| N |" in out or "| N " in out


def test_check_single_minimal_json(capsys):
    assert main(["check", "--problem", "2103_1", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    rec = data["verdicts"][0]
    assert rec["label"] == "2103_1"
    assert rec["minimal"] is True
    assert data["summary"]["all_match_reference"] is True
    assert "seconds" not in json.dumps(data)


def test_check_unknown_label_fails(capsys):
    assert main(["check", "--problem", "0000_0"]) == 2
    assert "no balanced problem" in capsys.readouterr().err


def test_degree_target_mode(capsys):
    assert main(["degree", "--problem", "3200_3", "--target", "12"]) == 0
    out = capsys.readouterr().out
    assert "12" in out


def test_degree_rejects_non_minimal(capsys):
    assert main(["degree", "--problem", "2201_1"]) == 2
    assert "minimal" in capsys.readouterr().err.lower()


def test_degree_guards_large_runs(capsys):
    assert main(["degree", "--problem", "2003_2"]) == 2
    err = capsys.readouterr().err
    assert "--include-large" in err


def test_degree_json_is_reproducible(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    args = ["degree", "--problem", "5000_2", "--target", "20", "--format", "json", "--seed", "3"]
    assert main(args + ["--output", str(out1)]) == 0
    assert main(args + ["--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rec = json.loads(out1.read_text())
    assert rec["degree"] == 20
    assert rec["stop_reason"] == "target"
    assert rec["matches_reference"] is True
    assert "seconds" not in json.dumps(rec)


def test_primes_env_override(capsys, monkeypatch):
    monkeypatch.setenv("POINTLINE_PRIMES", "32749,32719")
    assert main(["check", "--problem", "3200_4", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    ranks = data["verdicts"][0]["ranks"]
    assert set(ranks) == {"32749", "32719"} or set(ranks) == {32749, 32719}


def test_primes_env_invalid(capsys, monkeypatch):
    monkeypatch.setenv("POINTLINE_PRIMES", "6,7")
    assert main(["check", "--problem", "3200_4"]) == 2


def test_primes_flag_beats_env(capsys, monkeypatch):
    monkeypatch.setenv("POINTLINE_PRIMES", "6,7")
    assert main(["check", "--problem", "3200_4", "--primes", "32713"]) == 0


def test_table_without_budget_skips_degrees(capsys):
    assert main(["table", "--budget", "0"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 39


def test_jobs_flag_smoke(capsys):
    assert main(["check", "--problem", "5000_2", "--jobs", "2"]) == 0


def test_output_file_writing(tmp_path, capsys):
    out = tmp_path / "cat.md"
    assert main(["enumerate", "--max-views", "2", "--output", str(out)]) == 0
    assert len(_rows(out.read_text())) == 5
