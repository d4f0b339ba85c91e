"""Rendering of load-test and simulation reports: text tables + JSON artifacts."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any, Optional, Sequence, Union


class EmptyReportError(ValueError):
    pass


def delta_p95(baseline_ms: float, candidate_ms: float) -> float:
    """Percent change of candidate p95 vs baseline, one decimal.

    Negative means the candidate improved on the baseline.
    """
    if baseline_ms == 0:
        raise ValueError("baseline p95 must be nonzero")
    return round(100.0 * (candidate_ms - baseline_ms) / baseline_ms, 1)


def report_to_dict(report: Any) -> dict:
    if dataclasses.is_dataclass(report):
        return dataclasses.asdict(report)
    if isinstance(report, dict):
        return report
    raise TypeError(f"cannot serialize report of type {type(report)!r}")


def write_report_json(report: Any, path: Union[str, Path]) -> None:
    if isinstance(report, (list, tuple)):
        payload: Any = [report_to_dict(r) for r in report]
    else:
        payload = report_to_dict(report)
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_report(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _row(cells: Sequence[str]) -> str:
    return " | ".join(cells)


def render_scenario_table(reports: Sequence[Any]) -> str:
    """Per-VU-level summary table (one row per scenario)."""
    if not reports:
        raise EmptyReportError("no scenario reports to render")
    lines = [
        _row(
            ["VUs", "Avg (ms)", "p90 (ms)", "p95 (ms)", "Max (ms)",
             "Failed (%)", "Recv (MB)", "Sent (MB)"]
        )
    ]
    for rep in reports:
        d = report_to_dict(rep)
        lines.append(
            _row(
                [
                    str(d["vus"]),
                    f"{d['avg_ms']:.2f}",
                    f"{d['p90_ms']:.1f}",
                    f"{d['p95_ms']:.1f}",
                    f"{d['max_ms']:.0f}",
                    f"{d['failed_fraction'] * 100:.2f}",
                    f"{d['bytes_received'] / 1e6:.1f}",
                    f"{d['bytes_sent'] / 1e6:.1f}",
                ]
            )
        )
    return "\n".join(lines)


def render_replica_table(
    sweep: Sequence[tuple[int, Any]], baseline_p95_ms: Optional[float] = None
) -> str:
    """Replica-scaling summary; the minimum-p95 row is starred.

    `sweep` pairs each replica count with its report.  Delta columns are
    computed against `baseline_p95_ms` (default: the first row's p95).
    """
    if not sweep:
        raise EmptyReportError("no sweep reports to render")
    dicts = [(r, report_to_dict(rep)) for r, rep in sweep]
    if baseline_p95_ms is None:
        baseline_p95_ms = dicts[0][1]["p95_ms"]
    best = min(d["p95_ms"] for _, d in dicts)

    lines = [
        _row(
            ["Replicas", "Avg (ms)", "p90 (s)", "p95 (s)", "Max (s)",
             "Failed (%)", "D p95 vs. base"]
        )
    ]
    for r, d in dicts:
        star = "*" if d["p95_ms"] == best else ""
        lines.append(
            _row(
                [
                    f"{r}{star}",
                    f"{d['avg_ms']:.2f}",
                    f"{d['p90_ms'] / 1000:.2f}",
                    f"{d['p95_ms'] / 1000:.2f}",
                    f"{d['max_ms'] / 1000:.2f}",
                    f"{d['failed_fraction'] * 100:.2f}",
                    f"{delta_p95(baseline_p95_ms, d['p95_ms']):+.1f}%",
                ]
            )
        )
    return "\n".join(lines)


def render_verdicts(verdicts: dict) -> str:
    p95 = verdicts["p95_ms"]
    fr = verdicts["fail_rate"]
    return "\n".join(
        [
            f"p95 {p95['value']:.1f} ms < {p95['limit']:.0f} ms: "
            f"{'pass' if p95['pass'] else 'FAIL'}",
            f"failure rate {fr['value'] * 100:.2f}% < {fr['limit'] * 100:.0f}%: "
            f"{'pass' if fr['pass'] else 'FAIL'}",
        ]
    )
