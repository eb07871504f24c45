"""Flatten a replayed experiment into the five analysis tables.

Output is deterministic: subjects in registration order, sessions and trades
in event order, floats in shortest round-trip form, "\n" line endings. A
replay of the same log therefore exports byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .. import engine
from ..engine import SessionMode
from .replay import ExperimentRecord

TABLE_NAMES = ("subjects", "loc", "decisions", "sessions", "survey")

_HEADERS = {
    "subjects": ["subject_id", "treatment", "loc_score"],
    "loc": ["subject_id", "item_id", "answer"],
    "decisions": ["subject_id", "session", "period", "day", "action", "exec_price"],
    "sessions": ["subject_id", "session", "mode", "start_index", "roi"],
    "survey": ["subject_id"] + [f"q{i}" for i in range(1, 8)],
}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _start_index_field(record: ExperimentRecord, starts: tuple[int, ...]) -> str:
    cfg = record.config
    if cfg is not None and cfg.start_draw_policy == engine.PER_PERIOD:
        return ";".join(str(s) for s in starts)
    return str(starts[0])


def render_tables(record: ExperimentRecord) -> dict[str, str]:
    """The five tables as CSV text, keyed by table name."""
    writers = {}
    buffers = {}
    for name in TABLE_NAMES:
        buffers[name] = io.StringIO()
        writers[name] = csv.writer(buffers[name], lineterminator="\n")
        writers[name].writerow(_HEADERS[name])

    for sid in record.subject_order:
        subj = record.subjects[sid]
        writers["subjects"].writerow(
            [
                sid,
                subj.treatment.value if subj.treatment else "",
                _fmt(subj.loc_score),
            ]
        )
        if subj.loc_answers is not None:
            for item_id, answer in enumerate(subj.loc_answers, start=1):
                writers["loc"].writerow([sid, item_id, "T" if answer else "F"])
        for session_no, session in enumerate(subj.sessions, start=1):
            writers["sessions"].writerow(
                [
                    sid,
                    session_no,
                    session.mode.value,
                    _start_index_field(record, session.starts),
                    _fmt(session.roi),
                ]
            )
            for trade in session.trade_log:
                if session.mode is SessionMode.AUTOMATED:
                    label = session.period_choices[trade.period].value
                else:
                    label = trade.requested.value
                writers["decisions"].writerow(
                    [sid, session_no, trade.period, trade.day, label, _fmt(trade.price)]
                )
        if subj.survey_response is not None:
            writers["survey"].writerow([sid, *subj.survey_response])

    return {name: buffers[name].getvalue() for name in TABLE_NAMES}


def export_csv(record: ExperimentRecord, out_dir) -> dict[str, Path]:
    """Write the five tables under out_dir; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, text in render_tables(record).items():
        path = out_dir / f"{name}.csv"
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    return paths
