"""Post-hoc studies over exported tables or the raw event log.

Three research questions and one questionnaire summary:
  performance  - paired comparison of rule-based vs discretionary returns
  rationality  - did third-session choices follow the better earlier result
  behavior     - control-test score vs chosen mode (point-biserial)
  survey       - per-question top-3-box percentages

Studies consume rows shaped like the exported CSVs (all string fields), so
the same code runs on an export directory or on rows scanned straight from
the log. The log scan needs no price series: it reads only recorded draws,
recorded ROIs, and submitted answers.
"""

from __future__ import annotations

import csv
import statistics
from pathlib import Path
from typing import Iterable, Optional, Sequence

from scipy.stats import pearsonr, wilcoxon

from .engine import ExperimentConfig, SessionMode
from .errors import (
    CorruptLog,
    EmptyResponseSet,
    InsufficientN,
    NoEligibleSubjects,
    NoPairedSubjects,
    ZeroVariance,
)
from .instruments import aggregate_likert, score_loc
from .server.events import Kind, read_events

NOT_APPLICABLE = "NOT_APPLICABLE"

MIN_NONZERO_PAIRS = 5  # below this the signed-rank p-value is not meaningful

STUDIES = ("performance", "rationality", "behavior", "survey")


# --- loading ---


def load_tables(export_dir) -> dict[str, list[dict]]:
    """Read the exported CSVs back into row dicts (strings, as written)."""
    export_dir = Path(export_dir)
    tables = {}
    for name in ("subjects", "loc", "decisions", "sessions", "survey"):
        path = export_dir / f"{name}.csv"
        if not path.exists():
            tables[name] = []
            continue
        with path.open(newline="", encoding="utf-8") as fh:
            tables[name] = list(csv.DictReader(fh))
    return tables


def tables_from_log(log_path) -> dict[str, list[dict]]:
    """Scan the event log into study rows without replaying prices.

    Produces the subjects, sessions, loc and survey tables; the decisions
    table needs execution prices, which only a full replay against the
    price series can supply, so it is left empty here.
    """
    config: Optional[ExperimentConfig] = None
    order: list[str] = []
    treatment: dict[str, str] = {}
    loc_rows: list[dict] = []
    loc_score: dict[str, int] = {}
    sessions: dict[str, list[dict]] = {}
    survey_rows: list[dict] = []

    for event in read_events(log_path):
        sid = event.subject_id
        if event.kind == Kind.EXPERIMENT_CREATED:
            config = ExperimentConfig.from_dict(event.payload["config"])
        elif event.kind == Kind.SUBJECT_REGISTERED:
            order.append(sid)
            sessions[sid] = []
        elif event.kind == Kind.TREATMENT_ASSIGNED:
            treatment[sid] = event.payload["treatment"]
        elif event.kind == Kind.LOC_SUBMITTED:
            answers = event.payload["answers"]
            external = config.loc_external_ids if config else None
            if external is None:
                raise CorruptLog("control-test answers before experiment config")
            loc_score[sid] = score_loc(answers, external)
            for item_id, answer in enumerate(answers, start=1):
                loc_rows.append(
                    {
                        "subject_id": sid,
                        "item_id": str(item_id),
                        "answer": "T" if answer else "F",
                    }
                )
        elif event.kind == Kind.SESSION_STARTED:
            start = event.payload["start_index"]
            field = (
                ";".join(str(s) for s in start)
                if isinstance(start, list)
                else str(start)
            )
            sessions[sid].append(
                {
                    "subject_id": sid,
                    "session": str(len(sessions[sid]) + 1),
                    "mode": event.payload["mode"],
                    "start_index": field,
                    "roi": "",
                }
            )
        elif event.kind == Kind.SESSION_SETTLED:
            sessions[sid][-1]["roi"] = repr(float(event.payload["roi"]))
        elif event.kind == Kind.SURVEY_SUBMITTED:
            row = {"subject_id": sid}
            for i, answer in enumerate(event.payload["answers"], start=1):
                row[f"q{i}"] = str(answer)
            survey_rows.append(row)

    subjects = [
        {
            "subject_id": sid,
            "treatment": treatment.get(sid, ""),
            "loc_score": str(loc_score[sid]) if sid in loc_score else "",
        }
        for sid in order
    ]
    session_rows = [row for sid in order for row in sessions[sid]]
    return {
        "subjects": subjects,
        "loc": loc_rows,
        "decisions": [],
        "sessions": session_rows,
        "survey": survey_rows,
    }


# --- row wrangling ---


def _settled_roi(row: dict) -> Optional[float]:
    raw = row.get("roi", "")
    return float(raw) if raw not in ("", None) else None


def _rois_by_mode(rows: Iterable[dict]) -> dict[str, dict[str, float]]:
    """subject -> mode -> settled ROI, from the first two sessions only."""
    out: dict[str, dict[str, float]] = {}
    for row in rows:
        if int(row["session"]) not in (1, 2):
            continue
        roi = _settled_roi(row)
        if roi is None:
            continue
        out.setdefault(row["subject_id"], {})[row["mode"]] = roi
    return out


def _selections(rows: Iterable[dict]) -> dict[str, str]:
    """subject -> mode chosen for the third session."""
    return {
        row["subject_id"]: row["mode"]
        for row in rows
        if int(row["session"]) == 3
    }


# --- studies ---


def performance_study(sessions: Sequence[dict]) -> dict:
    """Paired within-subject comparison: d = roi_automated - roi_discretion."""
    by_mode = _rois_by_mode(sessions)
    auto, disc = SessionMode.AUTOMATED.value, SessionMode.DISCRETION.value
    pairs = [
        (rois[auto], rois[disc])
        for rois in by_mode.values()
        if auto in rois and disc in rois
    ]
    if not pairs:
        raise NoPairedSubjects("no subject has both sessions settled")
    roi_auto = [a for a, _ in pairs]
    roi_disc = [d for _, d in pairs]
    diffs = [a - d for a, d in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    if nonzero:
        stat = float(wilcoxon(nonzero, alternative="two-sided").statistic)
    else:
        stat = NOT_APPLICABLE
    if len(nonzero) >= MIN_NONZERO_PAIRS:
        p = float(wilcoxon(nonzero, alternative="two-sided").pvalue)
    else:
        p = NOT_APPLICABLE
    return {
        "n_pairs": len(pairs),
        "mean_automated": statistics.mean(roi_auto),
        "median_automated": statistics.median(roi_auto),
        "mean_discretion": statistics.mean(roi_disc),
        "median_discretion": statistics.median(roi_disc),
        "mean_diff": statistics.mean(diffs),
        "median_diff": statistics.median(diffs),
        "n_nonzero": len(nonzero),
        "wilcoxon_statistic": stat,
        "p_value": p,
    }


def rationality_study(sessions: Sequence[dict]) -> dict:
    """Share of third-session choices matching the strictly better ROI.

    Exact ties carry no better option, so tied subjects leave the
    denominator entirely.
    """
    by_mode = _rois_by_mode(sessions)
    selected = _selections(sessions)
    auto, disc = SessionMode.AUTOMATED.value, SessionMode.DISCRETION.value
    n_consistent = n_eligible = n_ties = 0
    for sid, mode in selected.items():
        rois = by_mode.get(sid, {})
        if auto not in rois or disc not in rois:
            continue
        if rois[auto] == rois[disc]:
            n_ties += 1
            continue
        better = auto if rois[auto] > rois[disc] else disc
        n_eligible += 1
        if mode == better:
            n_consistent += 1
    if n_eligible == 0:
        raise NoEligibleSubjects(
            "no subject with a selection and strictly different prior returns"
        )
    return {
        "rate": n_consistent / n_eligible,
        "n_consistent": n_consistent,
        "n_eligible": n_eligible,
        "n_ties_excluded": n_ties,
    }


def behavior_study(subjects: Sequence[dict], sessions: Sequence[dict]) -> dict:
    """Point-biserial correlation of control-test score with the chosen
    mode (1 = rule-based, 0 = discretionary)."""
    selected = _selections(sessions)
    scores, dummies = [], []
    for row in subjects:
        sid = row["subject_id"]
        if sid not in selected or row.get("loc_score", "") == "":
            continue
        scores.append(float(row["loc_score"]))
        dummies.append(1.0 if selected[sid] == SessionMode.AUTOMATED.value else 0.0)
    if len(scores) < 2:
        raise InsufficientN(f"need at least 2 subjects, have {len(scores)}")
    if len(set(scores)) == 1 or len(set(dummies)) == 1:
        raise ZeroVariance("correlation undefined without variation on both sides")
    r = float(pearsonr(scores, dummies).statistic)
    return {"r": r, "n": len(scores)}


def survey_report(survey_rows: Sequence[dict]) -> list[dict]:
    """Per-question top-3-box table from exported survey rows."""
    if not survey_rows:
        raise EmptyResponseSet("no survey responses")
    responses = [
        tuple(int(row[f"q{i}"]) for i in range(1, 8)) for row in survey_rows
    ]
    return aggregate_likert(responses)


# --- rendering ---


def _fmt_stat(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def render_performance(report: dict) -> str:
    lines = [
        "performance: automated rule vs human discretion (paired ROI)",
        f"  subjects paired:      {report['n_pairs']}",
        f"  mean ROI automated:   {_fmt_stat(report['mean_automated'])}",
        f"  median ROI automated: {_fmt_stat(report['median_automated'])}",
        f"  mean ROI discretion:  {_fmt_stat(report['mean_discretion'])}",
        f"  median ROI discretion:{_fmt_stat(report['median_discretion'])}",
        f"  mean difference:      {_fmt_stat(report['mean_diff'])}",
        f"  median difference:    {_fmt_stat(report['median_diff'])}",
        f"  nonzero differences:  {report['n_nonzero']}",
        f"  wilcoxon statistic:   {_fmt_stat(report['wilcoxon_statistic'])}",
        f"  two-sided p:          {_fmt_stat(report['p_value'])}",
    ]
    return "\n".join(lines)


def render_rationality(report: dict) -> str:
    lines = [
        "rationality: third-session choice vs strictly better prior ROI",
        f"  consistent: {report['n_consistent']}/{report['n_eligible']}"
        f" (rate {report['rate']:.4f})",
        f"  ties excluded: {report['n_ties_excluded']}",
    ]
    return "\n".join(lines)


def render_behavior(report: dict) -> str:
    lines = [
        "behavior: control-test score vs chosen mode (1 = automated)",
        f"  point-biserial r: {report['r']:.4f}",
        f"  n: {report['n']}",
    ]
    return "\n".join(lines)


def render_survey(rows: Sequence[dict]) -> str:
    lines = [
        "survey: per-question response split (percent)",
        "  question  n     agree(5-7)  other(1-4)",
    ]
    for row in rows:
        lines.append(
            f"  Q{row['question']:<7} {row['n']:<5} {row['top3_pct']:>10.2f}"
            f"  {row['bottom4_pct']:>10.2f}"
        )
    return "\n".join(lines)


def report_csv_rows(study: str, report) -> tuple[list[str], list[list]]:
    """Header and rows for the machine-readable form of one study report."""
    if study == "survey":
        header = ["question", "n", "top3_pct", "bottom4_pct"]
        rows = [
            [r["question"], r["n"], f"{r['top3_pct']:.2f}", f"{r['bottom4_pct']:.2f}"]
            for r in report
        ]
        return header, rows
    header = ["metric", "value"]
    return header, [[k, v] for k, v in report.items()]


def write_report_csv(study: str, report, path) -> None:
    header, rows = report_csv_rows(study, report)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_study(study: str, tables: dict[str, list[dict]]):
    if study == "performance":
        return performance_study(tables["sessions"])
    if study == "rationality":
        return rationality_study(tables["sessions"])
    if study == "behavior":
        return behavior_study(tables["subjects"], tables["sessions"])
    if study == "survey":
        return survey_report(tables["survey"])
    raise ValueError(f"unknown study: {study}")


def render_study(study: str, report) -> str:
    renderer = {
        "performance": render_performance,
        "rationality": render_rationality,
        "behavior": render_behavior,
        "survey": render_survey,
    }[study]
    return renderer(report)
