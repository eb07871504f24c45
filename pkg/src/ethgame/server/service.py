"""Experiment service: the single writer in front of the event log.

Request handling discipline, for every mutating call:
validate against the replayed state -> build the event batch (the user's
event plus any system events it forces) -> fold the batch on a scratch copy
-> durably append -> swap the scratch in -> answer from visible_state.
An invalid request therefore appends nothing.

Sessions start lazily: the start-date draw happens on the first request that
needs the session (chart fetch, or a mode-matching strategy/decision post),
is appended as a SessionStarted event, and is never re-drawn. Settlement is
a system event emitted right after the action that completes the last
period; if a crash separates the two, recovery settles on startup.

Locking: one lock per subject serializes that subject's transitions; a
global lock serializes log appends and the shared record/rng.
"""

from __future__ import annotations

import hashlib
import random
import secrets
import threading
from typing import Optional

from .. import engine
from ..engine import (
    AiStrategy,
    ExperimentConfig,
    SessionMode,
    Stage,
    SubjectState,
    TradeAction,
)
from ..errors import (
    GameError,
    OutOfTurn,
    StateConflict,
    WrongMode,
)
from ..pricedata import PriceSeries, chart_window, draw_session_start
from .events import Event, EventLog, Kind, now_iso
from .replay import ExperimentRecord, Replayer, replay


class UnknownSubject(KeyError):
    pass


def price_sha256(csv_text: str) -> str:
    return hashlib.sha256(csv_text.encode("utf-8")).hexdigest()


class ExperimentService:
    def __init__(
        self,
        config: ExperimentConfig,
        series: PriceSeries,
        log_path,
        price_path: str = "prices.csv",
        price_csv_text: str = "",
    ):
        self.config = config
        self.series = series
        self.price_source = {
            "path": str(price_path),
            "sha256": price_sha256(price_csv_text),
        }
        self.rng = random.Random(config.seed)
        self.log = EventLog(log_path)
        self._global = threading.RLock()
        self._subject_locks: dict[str, threading.Lock] = {}
        existing = self.log.open()
        self.record = replay(existing, series)
        if self.record.config is not None:
            # resumed experiment: the logged config is authoritative
            self.config = self.record.config
        self._recover()

    def close(self) -> None:
        self.log.close()

    # -- internals --

    def _subject_lock(self, subject_id: str) -> threading.Lock:
        with self._global:
            lock = self._subject_locks.get(subject_id)
            if lock is None:
                lock = self._subject_locks[subject_id] = threading.Lock()
            return lock

    def _new_event(self, seq: int, kind: str, payload: dict, subject_id=None) -> Event:
        return Event(
            seq=seq,
            timestamp=now_iso(),
            subject_id=subject_id,
            kind=kind,
            payload=payload,
        )

    def _commit(self, specs: list[tuple[str, dict, Optional[str]]]) -> ExperimentRecord:
        """Fold a batch on a scratch record, append, then swap the scratch in."""
        with self._global:
            scratch = self.record.copy()
            replayer = Replayer(scratch, self.series)
            events = []
            seq = self.log.next_seq
            for kind, payload, subject_id in specs:
                event = self._new_event(seq, kind, payload, subject_id)
                replayer.apply(event)
                events.append(event)
                seq += 1
            self.log.append(events)
            self.record = scratch
            return scratch

    def _recover(self) -> None:
        """Complete settlement cascades cut off by a crash."""
        cfg = self.config
        if self.record.config is None:
            return
        for sid, subj in list(self.record.subjects.items()):
            current = engine.active_session(subj)
            if current is not None and engine.session_complete(current, cfg):
                settled = engine.settle_session(current, self.series, cfg)
                self._commit(
                    [(Kind.SESSION_SETTLED, {"roi": settled.roi}, sid)]
                )

    def _get(self, subject_id: str) -> SubjectState:
        subj = self.record.subjects.get(subject_id)
        if subj is None:
            raise UnknownSubject(subject_id)
        return subj

    def _view(self, subj: SubjectState) -> dict:
        return engine.visible_state(subj, self.series, self.config)

    def _draw_starts_payload(self):
        cfg = self.config
        if cfg.start_draw_policy == engine.PER_PERIOD:
            return [
                draw_session_start(self.series, cfg.lookback, cfg.period_len, self.rng)
                for _ in range(cfg.periods_per_session)
            ]
        return draw_session_start(
            self.series, cfg.lookback, cfg.session_days, self.rng
        )

    def _start_spec_if_due(
        self, subj: SubjectState, for_mode: Optional[SessionMode] = None
    ) -> list[tuple[str, dict, Optional[str]]]:
        """SessionStarted spec for a due-but-unstarted session, else [].

        With ``for_mode`` set, a due session of a different mode is a
        WrongMode error instead of a silent start.
        """
        if subj.stage not in engine.SESSION_STAGES:
            return []
        session_no = engine.SESSION_STAGES.index(subj.stage) + 1
        if len(subj.sessions) != session_no - 1:
            return []
        mode = engine.expected_mode(subj, session_no)
        if mode is None:
            raise StateConflict("select a mode for the third session first")
        if for_mode is not None and mode is not for_mode:
            raise WrongMode(
                f"session {session_no} runs in {mode.value} mode"
            )
        with self._global:
            start_index = self._draw_starts_payload()
        return [
            (
                Kind.SESSION_STARTED,
                {"mode": mode.value, "start_index": start_index},
                subj.subject_id,
            )
        ]

    @staticmethod
    def _settle_spec_if_complete(subj: SubjectState, cfg: ExperimentConfig, series):
        current = engine.active_session(subj)
        if current is not None and engine.session_complete(current, cfg):
            settled = engine.settle_session(current, series, cfg)
            return [(Kind.SESSION_SETTLED, {"roi": settled.roi}, subj.subject_id)]
        return []

    # -- admin operations --

    def create_experiment(self) -> dict:
        with self._global:
            if self.record.config is not None:
                raise StateConflict("experiment already created")
            self._commit(
                [
                    (
                        Kind.EXPERIMENT_CREATED,
                        {
                            "config": self.config.to_dict(),
                            "price_source": dict(self.price_source),
                        },
                        None,
                    )
                ]
            )
            return {"created": True, "price_source": dict(self.price_source)}

    def snapshot(self) -> ExperimentRecord:
        with self._global:
            return self.record

    def progress(self) -> list[dict]:
        record = self.snapshot()
        rows = []
        for sid in record.subject_order:
            subj = record.subjects[sid]
            rows.append(
                {
                    "subject_id": sid,
                    "name": subj.name,
                    "stage": subj.stage.value,
                    "treatment": subj.treatment.value if subj.treatment else None,
                    "sessions_started": len(subj.sessions),
                    "sessions_settled": sum(1 for s in subj.sessions if s.settled),
                }
            )
        return rows

    # -- subject operations --

    def register_subject(self, name: str) -> dict:
        with self._global:
            if self.record.config is None:
                raise StateConflict("experiment not created yet")
            subject_id = f"s{len(self.record.subject_order) + 1:03d}"
            token = secrets.token_hex(16)
            treatment = engine.assign_treatment(self.rng)
            self._commit(
                [
                    (
                        Kind.SUBJECT_REGISTERED,
                        {"name": name, "token": token},
                        subject_id,
                    ),
                    (
                        Kind.TREATMENT_ASSIGNED,
                        {"treatment": treatment.value},
                        subject_id,
                    ),
                ]
            )
            return {
                "subject_id": subject_id,
                "token": token,
                "treatment": treatment.value,
            }

    def token_for(self, subject_id: str) -> str:
        return self._get(subject_id).token

    def state(self, subject_id: str) -> dict:
        with self._subject_lock(subject_id):
            return self._view(self._get(subject_id))

    def loc_items_view(self, subject_id: str) -> list[dict]:
        self._get(subject_id)
        from ..instruments import loc_items

        return [{"id": item.id, "text": item.text} for item in loc_items()]

    def submit_loc(self, subject_id: str, answers: list[bool]) -> dict:
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            if subj.stage is not Stage.LOC:
                raise StateConflict(
                    f"control test not open at stage {subj.stage.value}"
                )
            record = self._commit(
                [(Kind.LOC_SUBMITTED, {"answers": list(answers)}, subject_id)]
            )
            return self._view(record.subjects[subject_id])

    def chart(self, subject_id: str) -> dict:
        """Current window; starts a due session on first request."""
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            start_spec = self._start_spec_if_due(subj)
            if start_spec:
                record = self._commit(start_spec)
                subj = record.subjects[subject_id]
            current = engine.active_session(subj)
            if current is None or engine.session_complete(current, self.config):
                raise OutOfTurn("no decision pending, so no chart")
            decision_day = current.starts[current.current_period] + current.current_day
            window = chart_window(self.series, decision_day, self.config.lookback)
            return {
                "closes": list(window.closes),
                "dates": [d.isoformat() for d in window.dates],
                "end_date": window.end_date.isoformat(),
                "session": len(subj.sessions),
                "period": current.current_period,
                "day": current.current_day,
                "mode": current.mode.value,
            }

    def choose_strategy(self, subject_id: str, period: int, strategy: str) -> dict:
        strategy = AiStrategy(strategy)
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            specs = self._start_spec_if_due(subj, for_mode=SessionMode.AUTOMATED)
            subj_after = self._peek(specs, subject_id)
            current = engine.active_session(subj_after)
            if current is None:
                raise OutOfTurn("no session in progress")
            if current.mode is not SessionMode.AUTOMATED:
                raise WrongMode("this session takes daily decisions, not strategies")
            specs.append(
                (
                    Kind.STRATEGY_CHOSEN,
                    {"period": int(period), "strategy": strategy.value},
                    subject_id,
                )
            )
            subj_after = self._peek(specs, subject_id)
            specs.extend(
                self._settle_spec_if_complete(subj_after, self.config, self.series)
            )
            record = self._commit(specs)
            return self._view(record.subjects[subject_id])

    def submit_decision(
        self,
        subject_id: str,
        action: str,
        period: Optional[int] = None,
        day: Optional[int] = None,
    ) -> dict:
        """Apply one daily decision. Optional period/day pin the decision to
        a specific day so a duplicate submission conflicts instead of
        silently consuming the next day."""
        action = TradeAction(action)
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            specs = self._start_spec_if_due(subj, for_mode=SessionMode.DISCRETION)
            subj_after = self._peek(specs, subject_id)
            current = engine.active_session(subj_after)
            if current is None:
                raise OutOfTurn("no session in progress")
            if current.mode is not SessionMode.DISCRETION:
                raise WrongMode("this session takes strategy commitments, not decisions")
            target_period = current.current_period if period is None else int(period)
            target_day = current.current_day if day is None else int(day)
            specs.append(
                (
                    Kind.DECISION_SUBMITTED,
                    {"period": target_period, "day": target_day, "action": action.value},
                    subject_id,
                )
            )
            subj_after = self._peek(specs, subject_id)
            specs.extend(
                self._settle_spec_if_complete(subj_after, self.config, self.series)
            )
            record = self._commit(specs)
            return self._view(record.subjects[subject_id])

    def select_mode(self, subject_id: str, mode: str) -> dict:
        mode = SessionMode(mode)
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            engine.self_select(subj, mode)  # validate only
            record = self._commit(
                [(Kind.MODE_SELECTED, {"mode": mode.value}, subject_id)]
            )
            return self._view(record.subjects[subject_id])

    def results(self, subject_id: str) -> list[dict]:
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            if engine.active_session(subj) is not None:
                raise StateConflict(
                    "results are revealed only at the end of the session"
                )
            return [
                {
                    "session": i + 1,
                    "mode": s.mode.value,
                    "usd": s.portfolio.usd,
                    "eth": s.portfolio.eth,
                    "roi": s.roi,
                }
                for i, s in enumerate(subj.sessions)
                if s.settled
            ]

    def submit_survey(self, subject_id: str, answers: list[int]) -> dict:
        with self._subject_lock(subject_id):
            subj = self._get(subject_id)
            if subj.stage is not Stage.SURVEY:
                raise StateConflict(f"survey not open at stage {subj.stage.value}")
            record = self._commit(
                [(Kind.SURVEY_SUBMITTED, {"answers": list(answers)}, subject_id)]
            )
            return self._view(record.subjects[subject_id])

    # -- validation helper --

    def _peek(self, specs, subject_id: str) -> SubjectState:
        """Subject state after folding specs on a scratch copy (no append)."""
        if not specs:
            return self._get(subject_id)
        with self._global:
            scratch = self.record.copy()
            replayer = Replayer(scratch, self.series)
            seq = self.log.next_seq
            for kind, payload, sid in specs:
                replayer.apply(self._new_event(seq, kind, payload, sid))
                seq += 1
        return scratch.subjects[subject_id]
