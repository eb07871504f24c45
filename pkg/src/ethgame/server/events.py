"""Append-only event log: JSON Lines, one event per line.

The log is the sole persistence primitive and the canonical dataset. Every
line is flushed and fsynced before the write is acknowledged, so any prefix
of the file is a valid log.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import dataclass
from typing import Iterator, Optional

from ..errors import CorruptLog


class Kind:
    EXPERIMENT_CREATED = "ExperimentCreated"
    SUBJECT_REGISTERED = "SubjectRegistered"
    TREATMENT_ASSIGNED = "TreatmentAssigned"
    LOC_SUBMITTED = "LocSubmitted"
    SESSION_STARTED = "SessionStarted"
    STRATEGY_CHOSEN = "StrategyChosen"
    DECISION_SUBMITTED = "DecisionSubmitted"
    SESSION_SETTLED = "SessionSettled"
    MODE_SELECTED = "ModeSelected"
    SURVEY_SUBMITTED = "SurveySubmitted"

    ALL = frozenset(
        {
            EXPERIMENT_CREATED,
            SUBJECT_REGISTERED,
            TREATMENT_ASSIGNED,
            LOC_SUBMITTED,
            SESSION_STARTED,
            STRATEGY_CHOSEN,
            DECISION_SUBMITTED,
            SESSION_SETTLED,
            MODE_SELECTED,
            SURVEY_SUBMITTED,
        }
    )


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: str
    kind: str
    payload: dict
    subject_id: Optional[str] = None

    def to_json(self) -> str:
        doc: dict = {"seq": self.seq, "timestamp": self.timestamp}
        if self.subject_id is not None:
            doc["subject_id"] = self.subject_id
        doc["kind"] = self.kind
        doc["payload"] = self.payload
        return json.dumps(doc, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "Event":
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorruptLog(f"unparseable line: {e}") from None
        if not isinstance(doc, dict):
            raise CorruptLog("event line is not an object")
        if "seq" not in doc or "kind" not in doc:
            raise CorruptLog("event missing mandatory seq/kind")
        seq, kind = doc["seq"], doc["kind"]
        if not isinstance(seq, int) or seq < 1:
            raise CorruptLog(f"bad seq {seq!r}")
        if kind not in Kind.ALL:
            raise CorruptLog(f"unknown event kind {kind!r}")
        payload = doc.get("payload", {})
        if not isinstance(payload, dict):
            raise CorruptLog(f"seq {seq}: payload must be an object")
        return Event(
            seq=seq,
            timestamp=doc.get("timestamp", ""),
            subject_id=doc.get("subject_id"),
            kind=kind,
            payload=payload,
        )


def now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")


def read_events(path) -> list[Event]:
    """Load and structurally validate a log file (seq must be 1,2,3,...)."""
    events: list[Event] = []
    if not os.path.exists(path):
        return events
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            event = Event.from_json(line)
            expected = len(events) + 1
            if event.seq != expected:
                raise CorruptLog(
                    f"line {lineno}: seq {event.seq}, expected {expected}"
                )
            events.append(event)
    return events


class EventLog:
    """File-backed appender. Callers must hold their own write lock; this
    class only guarantees durability and seq assignment."""

    def __init__(self, path):
        self.path = path
        self._fh = None
        self._next_seq = 1

    def open(self) -> list[Event]:
        """Open (creating if absent), validate existing content, return it."""
        existing = read_events(self.path)
        self._next_seq = len(existing) + 1
        self._fh = open(self.path, "a", encoding="utf-8")
        return existing

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @property
    def next_seq(self) -> int:
        return self._next_seq

    def append(self, events: list[Event]) -> None:
        """Durably append pre-validated events (one user action per batch)."""
        if self._fh is None:
            raise IOError("log not open")
        for event in events:
            if event.seq != self._next_seq:
                raise CorruptLog(
                    f"append out of order: seq {event.seq}, expected {self._next_seq}"
                )
            self._fh.write(event.to_json() + "\n")
            self._next_seq += 1
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def __iter__(self) -> Iterator[Event]:
        return iter(read_events(self.path))
