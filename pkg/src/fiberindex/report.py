"""Report emission: summary text, fixed-column CSV and a YAML dump."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .checks import THEOREM_TAG, Row
from .constants import CHERN_WEIL, KAPPA, TOLERANCES

__all__ = ["CSV_COLUMNS", "Report", "emit_report", "load_report"]

# one row per test; floats are written with 17 significant digits
CSV_COLUMNS = ["name", "formula", "oracle", "delta", "tolerance", "pass"]


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _plain(obj):
    """Convert numpy scalars and tuples to plain YAML-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _plain(obj.item())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


@dataclass
class Report:
    rows: list
    config: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    kappa: float = KAPPA
    zeta: dict = field(default_factory=dict)
    # (trial, lhs, rhs, delta) records of the trace-defect sweep, if any
    zeta_trials: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def theorem_rows(self) -> list:
        return [r for r in self.rows if THEOREM_TAG in r.tags]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.name, _num(r.formula), _num(r.oracle), _num(r.delta), _num(r.tolerance),
                        "true" if r.passed else "false"])
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = [f"rows: {len(self.rows)}  passed: {sum(r.passed for r in self.rows)}  "
                 f"failed: {sum(not r.passed for r in self.rows)}",
                 f"kappa: {self.kappa}"]
        width = max([len(r.name) for r in self.rows] + [4])
        for r in self.rows:
            flag = "PASS" if r.passed else "FAIL"
            lines.append(f"{flag}  {r.name:<{width}}  formula={r.formula:.10g}  oracle={r.oracle:.10g}  "
                         f"delta={r.delta:.3g}  tol={r.tolerance:.3g}")
        thm = self.theorem_rows()
        if thm:
            ok = all(r.passed for r in thm)
            lines.append("")
            lines.append(f"theorem check (point cycle and T^2 rows): {len(thm)} rows, "
                         f"{'all pass' if ok else 'FAILURES'}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return _plain({
            "kappa": self.kappa,
            "calibration": {"kappa": self.kappa, "chern_weil": [CHERN_WEIL.real, CHERN_WEIL.imag]},
            "tolerances": self.tolerances,
            "config": self.config,
            "zeta": self.zeta,
            "passed": self.passed,
            "rows": [
                {"name": r.name, "formula": r.formula, "oracle": r.oracle, "delta": r.delta,
                 "tolerance": r.tolerance, "pass": r.passed, "tags": list(r.tags), "detail": r.detail}
                for r in self.rows
            ],
        })

    def reverify(self) -> list:
        """Names of rows whose stored pass flag disagrees with delta <= tolerance and stored conditions."""
        bad = []
        for r in self.rows:
            cond = r.detail.get("conditions_ok", True)
            if r.detail.get("rule") == "exceeds":
                expect = r.delta > r.tolerance
            else:
                expect = r.delta <= r.tolerance and cond
            if r.passed != bool(expect):
                bad.append(r.name)
        return bad


def emit_report(report: Report, out_dir) -> dict:
    """Write summary.txt, results.csv and report.yaml; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / "summary.txt", "csv": out / "results.csv", "yaml": out / "report.yaml"}
    paths["summary"].write_text(report.summary_text())
    paths["csv"].write_text(report.csv_text())
    paths["yaml"].write_text(yaml.safe_dump(report.to_dict(), sort_keys=True))
    return paths


def load_report(path) -> Report:
    """Reload a YAML dump (or the directory holding report.yaml)."""
    p = Path(path)
    if p.is_dir():
        p = p / "report.yaml"
    data = yaml.safe_load(p.read_text())
    rows = [Row(d["name"], float(d["formula"]), float(d["oracle"]), float(d["delta"]), float(d["tolerance"]),
                bool(d["pass"]), tuple(d.get("tags", ())), d.get("detail", {}))
            for d in data.get("rows", [])]
    return Report(rows, data.get("config", {}), data.get("tolerances", {}), data.get("kappa", KAPPA),
                  data.get("zeta", {}))
