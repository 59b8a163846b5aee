"""Analysis report over an exported dataset CSV.

Ingests the service export (one row per participant-assignment), runs the
normality-gated comparison per metric column and renders the result as JSON
plus a plain-text table: dimension, metric, per-group M +/- SD, method,
statistic, p and the p < 0.05 significance flag.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

from .analytics import (
    SIGNIFICANCE_ALPHA,
    GroupSummary,
    TooFewValues,
    compare_groups,
    group_sample,
)
from .errors import EmptyFilter

ID_COLUMNS = ("participant_id", "assignment_id", "condition")
CONDITION_ORDER = ("long_form", "reels")  # control group first

_DIMENSIONS = {
    "quiz_score_pct": "learning effectiveness",
    "quiz_duration_s": "learning effectiveness",
    "revisits": "learning effectiveness",
    "ueq_s": "user experience",
    "imi_competence": "perceived competence",
    "tlx": "task load index",
    "learning_effectiveness": "perceived learning effectiveness",
    "learning_experience": "perceived learning experience",
    "trust": "trust",
}


@dataclass(frozen=True)
class ReportRow:
    dimension: str
    metric: str
    groups: tuple[GroupSummary, ...]
    method: str
    statistic: float | None
    p_value: float | None
    significant: bool | None
    note: str = ""


def column_dimension(column: str) -> str:
    instrument = column.split(":", 1)[0]
    return _DIMENSIONS.get(instrument, instrument)


def analyze_rows(rows: list[dict]) -> list[ReportRow]:
    if not rows:
        raise EmptyFilter("dataset has no rows")
    conditions = sorted({r["condition"] for r in rows})
    if len(conditions) != 2:
        raise TooFewValues(
            f"need exactly two conditions to compare, found {conditions}")
    ordered = [c for c in CONDITION_ORDER if c in conditions]
    if len(ordered) != 2:
        ordered = conditions

    metric_columns = [c for c in rows[0].keys() if c not in ID_COLUMNS]
    out: list[ReportRow] = []
    for column in metric_columns:
        groups = []
        for cond in ordered:
            values = []
            for r in rows:
                if r["condition"] == cond and r.get(column, "") not in ("", None):
                    values.append(float(r[column]))
            groups.append((cond, values))
        if any(len(v) < 3 for _, v in groups):
            summaries = tuple(
                GroupSummary(label=c, mean=float("nan"), sd=float("nan"), n=len(v))
                if not v else
                GroupSummary(label=c, mean=sum(v) / len(v), sd=0.0, n=len(v))
                for c, v in groups)
            out.append(ReportRow(dimension=column_dimension(column), metric=column,
                                 groups=summaries, method="skipped",
                                 statistic=None, p_value=None, significant=None,
                                 note="fewer than 3 values in a group"))
            continue
        result = compare_groups(group_sample(groups[0][0], groups[0][1]),
                                group_sample(groups[1][0], groups[1][1]))
        out.append(ReportRow(dimension=column_dimension(column), metric=column,
                             groups=result.group_summaries, method=result.method,
                             statistic=result.statistic, p_value=result.p_value,
                             significant=result.p_value < SIGNIFICANCE_ALPHA))
    return out


def analyze_csv(csv_path: str) -> list[ReportRow]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return analyze_rows(rows)


def _fmt_ms(summary: GroupSummary) -> str:
    if summary.mean != summary.mean:  # NaN: empty group
        return f"- (n={summary.n})"
    return f"{summary.mean:.2f} ± {summary.sd:.2f} (n={summary.n})"


def render_text(rows: list[ReportRow]) -> str:
    headers = ["Dimension", "Metric", "Group 1 (M ± SD)", "Group 2 (M ± SD)",
               "Method", "Statistic", "p", "Sig."]
    table = [headers]
    for r in rows:
        stat = "" if r.statistic is None else f"{r.statistic:.2f}"
        p = "" if r.p_value is None else f"{r.p_value:.4f}"
        sig = "" if r.significant is None else ("*" if r.significant else "")
        table.append([r.dimension, r.metric, _fmt_ms(r.groups[0]),
                      _fmt_ms(r.groups[1]), r.method, stat, p, sig])
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = []
    for idx, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_report(rows: list[ReportRow], out_base: str) -> tuple[str, str]:
    """Write <out_base>.json and <out_base>.txt; returns both paths."""
    json_path = f"{out_base}.json"
    text_path = f"{out_base}.txt"
    payload = [asdict(r) for r in rows]
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(render_text(rows))
    return json_path, text_path
