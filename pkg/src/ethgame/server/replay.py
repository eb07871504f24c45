"""Fold an event log into experiment state.

The fold is a pure function of (log, price series): recorded draws are read
back, never re-drawn, and recorded ROIs are recomputed and cross-checked.
The live server and offline replay share this code path, which is what makes
replay determinism hold by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .. import engine
from ..engine import (
    AiStrategy,
    ExperimentConfig,
    SessionMode,
    Stage,
    SubjectState,
    Treatment,
)
from ..errors import (
    CorruptLog,
    GameError,
    IncompleteResponse,
    OutOfTurn,
    PeriodAlreadyCommitted,
    StateConflict,
)
from ..instruments import (
    LOC_ITEM_COUNT,
    SURVEY_QUESTION_COUNT,
    SURVEY_SCALE_MAX,
    SURVEY_SCALE_MIN,
    score_loc,
)
from ..pricedata import PriceSeries
from .events import Event, Kind


@dataclass
class ExperimentRecord:
    config: Optional[ExperimentConfig] = None
    price_source: Optional[dict] = None
    subjects: dict[str, SubjectState] = field(default_factory=dict)
    subject_order: list[str] = field(default_factory=list)
    last_seq: int = 0

    def copy(self) -> "ExperimentRecord":
        return ExperimentRecord(
            config=self.config,
            price_source=self.price_source,
            subjects=dict(self.subjects),
            subject_order=list(self.subject_order),
            last_seq=self.last_seq,
        )


def _session_stage_no(stage: Stage) -> Optional[int]:
    if stage in engine.SESSION_STAGES:
        return engine.SESSION_STAGES.index(stage) + 1
    return None


class Replayer:
    """Applies events to an ExperimentRecord, validating each transition."""

    def __init__(self, record: ExperimentRecord, series: PriceSeries):
        self.record = record
        self.series = series

    def apply(self, event: Event) -> None:
        if event.seq != self.record.last_seq + 1:
            raise CorruptLog(
                f"seq {event.seq} out of order, expected {self.record.last_seq + 1}"
            )
        handler = _HANDLERS.get(event.kind)
        if handler is None:
            raise CorruptLog(f"unknown event kind {event.kind!r}")
        handler(self, event)
        self.record.last_seq = event.seq

    # -- helpers --

    def _config(self) -> ExperimentConfig:
        if self.record.config is None:
            raise StateConflict("experiment not created yet")
        return self.record.config

    def _subject(self, event: Event) -> SubjectState:
        sid = event.subject_id
        if sid is None:
            raise CorruptLog(f"seq {event.seq}: {event.kind} requires subject_id")
        subj = self.record.subjects.get(sid)
        if subj is None:
            raise CorruptLog(f"seq {event.seq}: unknown subject {sid!r}")
        return subj

    def _store(self, subj: SubjectState) -> None:
        self.record.subjects[subj.subject_id] = subj

    def _active_session_or_conflict(self, subj: SubjectState):
        current = engine.active_session(subj)
        if current is None:
            raise OutOfTurn(f"subject {subj.subject_id} has no session in progress")
        return current

    # -- event handlers --

    def _experiment_created(self, event: Event) -> None:
        if self.record.config is not None:
            raise StateConflict("experiment already created")
        payload = event.payload
        try:
            config = ExperimentConfig.from_dict(payload["config"])
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptLog(f"seq {event.seq}: bad config payload: {e}") from None
        self.record.config = config
        self.record.price_source = dict(payload.get("price_source", {}))

    def _subject_registered(self, event: Event) -> None:
        self._config()
        sid = event.subject_id
        if sid is None:
            raise CorruptLog(f"seq {event.seq}: registration without subject_id")
        if sid in self.record.subjects:
            raise StateConflict(f"subject {sid!r} already registered")
        self.record.subjects[sid] = SubjectState(
            subject_id=sid,
            name=str(event.payload.get("name", "")),
            token=str(event.payload.get("token", "")),
        )
        self.record.subject_order.append(sid)

    def _treatment_assigned(self, event: Event) -> None:
        subj = self._subject(event)
        if subj.stage is not Stage.REGISTERED:
            raise StateConflict(f"treatment already assigned to {subj.subject_id}")
        try:
            treatment = Treatment(event.payload["treatment"])
        except (KeyError, ValueError):
            raise CorruptLog(f"seq {event.seq}: bad treatment payload") from None
        self._store(replace(subj, treatment=treatment, stage=Stage.LOC))

    def _loc_submitted(self, event: Event) -> None:
        cfg = self._config()
        subj = self._subject(event)
        if subj.stage is not Stage.LOC:
            raise StateConflict(f"not awaiting the control test (stage {subj.stage.value})")
        answers = event.payload.get("answers")
        if not isinstance(answers, list) or not all(
            isinstance(a, bool) for a in answers
        ):
            raise IncompleteResponse(
                f"answers must be {LOC_ITEM_COUNT} booleans"
            )
        score = score_loc(answers, cfg.loc_external_ids)  # validates the count
        self._store(
            replace(
                subj,
                loc_answers=tuple(answers),
                loc_score=score,
                stage=Stage.SESSION1,
            )
        )

    def _session_started(self, event: Event) -> None:
        cfg = self._config()
        subj = self._subject(event)
        stage_no = _session_stage_no(subj.stage)
        if stage_no is None:
            raise StateConflict(f"no session due at stage {subj.stage.value}")
        if len(subj.sessions) != stage_no - 1:
            raise StateConflict("previous session still open")
        expected = engine.expected_mode(subj, stage_no)
        if expected is None:
            raise StateConflict("session 3 mode not selected yet")
        try:
            mode = SessionMode(event.payload["mode"])
        except (KeyError, ValueError):
            raise CorruptLog(f"seq {event.seq}: bad mode payload") from None
        if mode is not expected:
            raise StateConflict(
                f"session {stage_no} must run in {expected.value}, not {mode.value}"
            )
        raw = event.payload.get("start_index")
        if isinstance(raw, int):
            starts = engine.period_starts(raw, cfg)
        elif (
            isinstance(raw, list)
            and len(raw) == cfg.periods_per_session
            and all(isinstance(i, int) for i in raw)
        ):
            starts = tuple(raw)
        else:
            raise CorruptLog(f"seq {event.seq}: bad start_index {raw!r}")
        for start in starts:
            if start < cfg.lookback or start + cfg.period_len > len(self.series):
                raise CorruptLog(
                    f"seq {event.seq}: start index {start} outside the usable range"
                )
        session = engine.new_session(mode, starts, cfg)
        self._store(replace(subj, sessions=subj.sessions + (session,)))

    def _strategy_chosen(self, event: Event) -> None:
        cfg = self._config()
        subj = self._subject(event)
        current = self._active_session_or_conflict(subj)
        try:
            strategy = AiStrategy(event.payload["strategy"])
            period = int(event.payload["period"])
        except (KeyError, ValueError, TypeError):
            raise CorruptLog(f"seq {event.seq}: bad strategy payload") from None
        if period != current.current_period:
            if period < current.current_period:
                raise PeriodAlreadyCommitted(f"period {period} already committed")
            raise OutOfTurn(f"current period is {current.current_period}, not {period}")
        updated = engine.choose_ai_strategy(current, strategy, self.series, cfg)
        self._store(replace(subj, sessions=subj.sessions[:-1] + (updated,)))

    def _decision_submitted(self, event: Event) -> None:
        cfg = self._config()
        subj = self._subject(event)
        current = self._active_session_or_conflict(subj)
        try:
            action = engine.TradeAction(event.payload["action"])
            period = int(event.payload["period"])
            day = int(event.payload["day"])
        except (KeyError, ValueError, TypeError):
            raise CorruptLog(f"seq {event.seq}: bad decision payload") from None
        if period != current.current_period or day != current.current_day:
            raise OutOfTurn(
                f"next decision is period {current.current_period} day "
                f"{current.current_day}, not period {period} day {day}"
            )
        updated = engine.apply_discretion_day(current, action, self.series, cfg)
        self._store(replace(subj, sessions=subj.sessions[:-1] + (updated,)))

    def _session_settled(self, event: Event) -> None:
        cfg = self._config()
        subj = self._subject(event)
        current = self._active_session_or_conflict(subj)
        settled = engine.settle_session(current, self.series, cfg)
        recorded = event.payload.get("roi")
        if not isinstance(recorded, (int, float)) or float(recorded) != settled.roi:
            raise CorruptLog(
                f"seq {event.seq}: recorded roi {recorded!r} does not match "
                f"recomputed {settled.roi!r}"
            )
        session_no = len(subj.sessions)
        next_stage = {
            1: Stage.SESSION2,
            2: Stage.SESSION3,
            3: Stage.SURVEY,
        }[session_no]
        self._store(
            replace(subj, sessions=subj.sessions[:-1] + (settled,), stage=next_stage)
        )

    def _mode_selected(self, event: Event) -> None:
        subj = self._subject(event)
        try:
            mode = SessionMode(event.payload["mode"])
        except (KeyError, ValueError):
            raise CorruptLog(f"seq {event.seq}: bad mode payload") from None
        self._store(engine.self_select(subj, mode))

    def _survey_submitted(self, event: Event) -> None:
        subj = self._subject(event)
        if subj.stage is not Stage.SURVEY:
            raise StateConflict(f"not awaiting the survey (stage {subj.stage.value})")
        answers = event.payload.get("answers")
        if (
            not isinstance(answers, list)
            or len(answers) != SURVEY_QUESTION_COUNT
            or not all(
                isinstance(a, int) and SURVEY_SCALE_MIN <= a <= SURVEY_SCALE_MAX
                for a in answers
            )
        ):
            raise IncompleteResponse(
                f"answers must be {SURVEY_QUESTION_COUNT} integers in "
                f"{SURVEY_SCALE_MIN}..{SURVEY_SCALE_MAX}"
            )
        self._store(
            replace(subj, survey_response=tuple(answers), stage=Stage.DONE)
        )


_HANDLERS = {
    Kind.EXPERIMENT_CREATED: Replayer._experiment_created,
    Kind.SUBJECT_REGISTERED: Replayer._subject_registered,
    Kind.TREATMENT_ASSIGNED: Replayer._treatment_assigned,
    Kind.LOC_SUBMITTED: Replayer._loc_submitted,
    Kind.SESSION_STARTED: Replayer._session_started,
    Kind.STRATEGY_CHOSEN: Replayer._strategy_chosen,
    Kind.DECISION_SUBMITTED: Replayer._decision_submitted,
    Kind.SESSION_SETTLED: Replayer._session_settled,
    Kind.MODE_SELECTED: Replayer._mode_selected,
    Kind.SURVEY_SUBMITTED: Replayer._survey_submitted,
}


def replay(events, series: PriceSeries) -> ExperimentRecord:
    """Fold a complete log. Any illegal transition is a corrupt log here,
    unlike the live path where it is a rejected request."""
    record = ExperimentRecord()
    replayer = Replayer(record, series)
    for event in events:
        try:
            replayer.apply(event)
        except CorruptLog:
            raise
        except GameError as e:
            raise CorruptLog(
                f"seq {event.seq}: illegal {event.kind}: {e}"
            ) from e
    return record
