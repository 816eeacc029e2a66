"""``report.json`` / ``summary.csv`` emission and reload."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .evaluate import Leaf, MetricsReport


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "metadata": report.metadata,
        "baseline": report.baseline,
        "aggregate": report.aggregate,
        "per_point": report.per_point,
        "relative_change_pct": report.relative,
        "leaves": [leaf.to_dict() for leaf in report.leaves],
        "forecasts": report.forecasts,
        "warnings": report.warnings,
        "failed": report.failed,
    }


def report_from_dict(d: dict) -> MetricsReport:
    return MetricsReport(
        leaves=[Leaf(**leaf) for leaf in d["leaves"]],
        aggregate=d["aggregate"],
        per_point=d.get("per_point", {}),
        relative=d.get("relative_change_pct", {}),
        baseline=d.get("baseline"),
        metadata=d.get("metadata", {}),
        forecasts=d.get("forecasts", []),
        warnings=d.get("warnings", []),
        failed=d.get("failed", []),
    )


def report_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def summary_csv(report: MetricsReport) -> str:
    targets = report.targets
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model"] + targets + ["mean"])
    for model, row in report.aggregate.items():
        w.writerow([model] + [repr(row[t]) for t in targets] + [repr(row["mean"])])
    return buf.getvalue()


def emit_report(report: MetricsReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "report.json", out / "summary.csv"]
    files[0].write_text(report_json(report), encoding="utf-8")
    files[1].write_text(summary_csv(report), encoding="utf-8")
    return files


def load_report(path) -> MetricsReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
