from __future__ import annotations

import csv

from teamcoach.feedback import analyze
from teamcoach.report import CSV_COLUMNS, metric_rows, write_report


def test_rows_match_metrics(team_three):
    rows = metric_rows([(team_three, analyze(team_three))])
    assert [r["member_id"] for r in rows] == ["U1", "U2", "U3"]
    assert [r["words"] for r in rows] == [23, 18, 15]
    assert all(set(r) == set(CSV_COLUMNS) for r in rows)


def test_report_files(tmp_path, team_three):
    files = write_report([team_three], tmp_path / "out")
    assert files.csv.exists()
    with files.csv.open(newline="", encoding="utf-8") as fh:
        table = list(csv.DictReader(fh))
    assert [row["alias"] for row in table] == ["alias-1", "alias-2", "alias-3"]
    assert list(table[0]) == list(CSV_COLUMNS)
    assert len(files.figures) == 3
    for fig in files.figures:
        assert fig.suffix == ".png"
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_tab_delimited(tmp_path, team_three):
    files = write_report([team_three], tmp_path, delimiter="\t")
    header = files.csv.read_text(encoding="utf-8").splitlines()[0]
    assert header.split("\t") == list(CSV_COLUMNS)
