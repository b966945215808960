import yaml

from fiberindex.checks import THEOREM_TAG, Row
from fiberindex.constants import KAPPA, TOLERANCES
from fiberindex.report import CSV_COLUMNS, Report, emit_report, load_report


def _rows():
    return [
        Row.compare("a", 1.0000001, 1.0, 1e-3, tags=(THEOREM_TAG,)),
        Row.deviation("b", 2e-11, 1e-10, trials=4),
        Row("c", 0.5, 0.0, 0.5, 1e-10, True, (), {"rule": "exceeds"}),
    ]


def test_empty_report_is_headers_only(tmp_path):
    rep = Report([])
    assert rep.csv_text() == ",".join(CSV_COLUMNS) + "\n"
    assert rep.passed
    paths = emit_report(rep, tmp_path)
    assert paths["csv"].read_text().splitlines() == [",".join(CSV_COLUMNS)]
    assert load_report(tmp_path).rows == []


def test_csv_format():
    lines = Report(_rows()).csv_text().splitlines()
    assert lines[0] == "name,formula,oracle,delta,tolerance,pass"
    name, f, o, d, t, ok = lines[1].split(",")
    assert name == "a" and float(f) == 1.0000001 and ok == "true"
    assert len(lines) == 4


def test_round_trip_and_reverify(tmp_path):
    rep = Report(_rows(), {"mode": "pair"}, dict(TOLERANCES), KAPPA, {"Pf(1)": {"finite_part": 0.0}})
    emit_report(rep, tmp_path)
    back = load_report(tmp_path / "report.yaml")
    assert [r.name for r in back.rows] == ["a", "b", "c"]
    assert back.csv_text() == rep.csv_text()
    assert back.reverify() == []
    assert back.kappa == KAPPA and back.config == {"mode": "pair"}


def test_reverify_detects_tampering(tmp_path):
    emit_report(Report(_rows()), tmp_path)
    data = yaml.safe_load((tmp_path / "report.yaml").read_text())
    data["rows"][1]["delta"] = 1.0
    data["rows"][2]["delta"] = 0.0
    (tmp_path / "report.yaml").write_text(yaml.safe_dump(data))
    assert load_report(tmp_path).reverify() == ["b", "c"]


def test_failed_condition_reverifies():
    r = Row.compare("x", 1.0, 1.0, 1e-3, extra_ok=False)
    assert Report([r]).reverify() == []


def test_dump_embeds_kappa_and_ledger(tmp_path):
    emit_report(Report(_rows(), tolerances={"identity": 1e-8}), tmp_path)
    data = yaml.safe_load((tmp_path / "report.yaml").read_text())
    assert data["kappa"] == KAPPA and data["calibration"]["kappa"] == KAPPA
    assert data["tolerances"] == {"identity": 1e-8}
    assert data["rows"][0]["tags"] == [THEOREM_TAG]


def test_summary_mentions_theorem_rows():
    text = Report(_rows()).summary_text()
    assert "theorem check" in text and "all pass" in text
    assert text.count("PASS") == 3
