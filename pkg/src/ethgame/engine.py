"""Deterministic game state machine.

Everything here is a pure state transition: state in, new state out. No I/O,
no randomness (start-date draws happen in the caller and arrive as recorded
indices), no clocks. The server serializes mutations per subject; distinct
subjects can be evaluated concurrently.

Trades execute at the decision day's close, the first price the subject has
not yet seen (the chart ends the day before). Balances compound across the
periods of a session and reset to the configured endowment across sessions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

from .errors import (
    AlreadySelected,
    OutOfTurn,
    PeriodAlreadyCommitted,
    PrerequisiteSessionsIncomplete,
    PriceCountMismatch,
    SessionAlreadySettled,
    SessionIncomplete,
    WrongMode,
)
from .instruments import DEFAULT_EXTERNAL_IDS
from .pricedata import PriceSeries, chart_window

PER_SESSION = "per_session"
PER_PERIOD = "per_period"


class TradeAction(str, Enum):
    BUY = "Buy"
    HOLD = "Hold"
    SELL = "Sell"


class AiStrategy(str, Enum):
    LONG = "Long"
    HOLDING = "Holding"
    SHORT = "Short"


class SessionMode(str, Enum):
    AUTOMATED = "Automated"
    DISCRETION = "Discretion"


class Treatment(str, Enum):
    A = "A"  # Automated first, then Discretion
    B = "B"  # Discretion first, then Automated


class Stage(str, Enum):
    REGISTERED = "Registered"
    LOC = "LoC"
    SESSION1 = "Session1"
    SESSION2 = "Session2"
    SESSION3 = "Session3"
    SURVEY = "Survey"
    DONE = "Done"


SESSION_STAGES = (Stage.SESSION1, Stage.SESSION2, Stage.SESSION3)


@dataclass(frozen=True)
class ExperimentConfig:
    initial_usd: float = 20507.6
    initial_eth: float = 100.0
    lot_size: float = 10.0
    period_len: int = 10
    periods_per_session: int = 3
    lookback: int = 30
    allow_negative_balances: bool = True
    start_draw_policy: str = PER_SESSION
    seed: Optional[int] = None
    loc_external_ids: frozenset[int] = field(default_factory=lambda: DEFAULT_EXTERNAL_IDS)

    def __post_init__(self):
        if self.lot_size <= 0:
            raise ValueError("lot_size must be > 0")
        if self.period_len < 1 or self.periods_per_session < 1 or self.lookback < 1:
            raise ValueError("period_len, periods_per_session, lookback must be >= 1")
        if self.start_draw_policy not in (PER_SESSION, PER_PERIOD):
            raise ValueError(f"unknown start_draw_policy {self.start_draw_policy!r}")
        object.__setattr__(self, "loc_external_ids", frozenset(self.loc_external_ids))

    @property
    def session_days(self) -> int:
        return self.period_len * self.periods_per_session

    def to_dict(self) -> dict:
        return {
            "initial_usd": self.initial_usd,
            "initial_eth": self.initial_eth,
            "lot_size": self.lot_size,
            "period_len": self.period_len,
            "periods_per_session": self.periods_per_session,
            "lookback": self.lookback,
            "allow_negative_balances": self.allow_negative_balances,
            "start_draw_policy": self.start_draw_policy,
            "seed": self.seed,
            "loc_external_ids": sorted(self.loc_external_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "loc_external_ids" in kwargs:
            kwargs["loc_external_ids"] = frozenset(int(i) for i in kwargs["loc_external_ids"])
        return cls(**kwargs)


@dataclass(frozen=True)
class Portfolio:
    usd: float
    eth: float


@dataclass(frozen=True)
class TradeRecord:
    period: int
    day: int
    requested: TradeAction
    executed: TradeAction
    price: float
    degraded: bool = False


@dataclass(frozen=True)
class SessionState:
    mode: SessionMode
    starts: tuple[int, ...]  # first trading-day index of each period
    portfolio: Portfolio
    current_period: int = 0
    current_day: int = 0
    period_choices: tuple[AiStrategy, ...] = ()
    trade_log: tuple[TradeRecord, ...] = ()
    settled: bool = False
    roi: Optional[float] = None

    @property
    def start_index(self) -> int:
        return self.starts[0]


@dataclass(frozen=True)
class SubjectState:
    subject_id: str
    name: str = ""
    token: str = ""
    treatment: Optional[Treatment] = None
    stage: Stage = Stage.REGISTERED
    loc_answers: Optional[tuple[bool, ...]] = None
    loc_score: Optional[int] = None
    sessions: tuple[SessionState, ...] = ()
    self_selected_mode: Optional[SessionMode] = None
    survey_response: Optional[tuple[int, ...]] = None


# --- basic operations ---


def assign_treatment(rng: random.Random) -> Treatment:
    """Fair coin: A (Automated first) below 1/2, B at or above."""
    return Treatment.A if rng.random() < 0.5 else Treatment.B


def strategy_action(strategy: AiStrategy) -> TradeAction:
    return {
        AiStrategy.LONG: TradeAction.BUY,
        AiStrategy.HOLDING: TradeAction.HOLD,
        AiStrategy.SHORT: TradeAction.SELL,
    }[strategy]


def execute_trade(
    p: Portfolio,
    action: TradeAction,
    price: float,
    lot: float,
    allow_negative: bool = True,
) -> tuple[Portfolio, bool]:
    """Apply one trade at the given close.

    Returns the new portfolio and a degradation flag: when negative balances
    are disallowed and the trade would drive one negative, the action degrades
    to Hold and the flag is set. Degradation is an outcome, not an error.
    """
    if action is TradeAction.BUY:
        new = Portfolio(usd=p.usd - lot * price, eth=p.eth + lot)
    elif action is TradeAction.SELL:
        new = Portfolio(usd=p.usd + lot * price, eth=p.eth - lot)
    else:
        return p, False
    if not allow_negative and (new.usd < 0 or new.eth < 0):
        return p, True
    return new, False


def portfolio_value(p: Portfolio, price: float) -> float:
    """Mark-to-market USD value; short/negative balances valued identically."""
    return p.usd + p.eth * price


def initial_portfolio(cfg: ExperimentConfig) -> Portfolio:
    return Portfolio(usd=cfg.initial_usd, eth=cfg.initial_eth)


def period_starts(start_index: int, cfg: ExperimentConfig) -> tuple[int, ...]:
    """Consecutive per-period first days for a single per-session draw."""
    return tuple(start_index + j * cfg.period_len for j in range(cfg.periods_per_session))


def new_session(
    mode: SessionMode, starts: Sequence[int], cfg: ExperimentConfig
) -> SessionState:
    starts = tuple(starts)
    if len(starts) != cfg.periods_per_session:
        raise ValueError(
            f"expected {cfg.periods_per_session} period starts, got {len(starts)}"
        )
    return SessionState(mode=mode, starts=starts, portfolio=initial_portfolio(cfg))


def session_complete(s: SessionState, cfg: ExperimentConfig) -> bool:
    return s.current_period >= cfg.periods_per_session


# --- period / day simulation ---


def run_period_automated(
    p: Portfolio,
    strategy: AiStrategy,
    prices: Sequence[float],
    cfg: ExperimentConfig,
    period: int = 0,
) -> tuple[Portfolio, list[TradeRecord]]:
    """Simulate one committed period: the strategy's action once per day,
    at that day's close, left to right."""
    if len(prices) != cfg.period_len:
        raise PriceCountMismatch(
            f"expected {cfg.period_len} closes, got {len(prices)}"
        )
    action = strategy_action(strategy)
    trades = []
    for day, price in enumerate(prices):
        p, degraded = execute_trade(
            p, action, price, cfg.lot_size, cfg.allow_negative_balances
        )
        trades.append(
            TradeRecord(
                period=period,
                day=day,
                requested=action,
                executed=TradeAction.HOLD if degraded else action,
                price=price,
                degraded=degraded,
            )
        )
    return p, trades


def apply_discretion_day(
    s: SessionState, action: TradeAction, series: PriceSeries, cfg: ExperimentConfig
) -> SessionState:
    """Execute one daily decision at the current day's close and advance."""
    if s.mode is not SessionMode.DISCRETION:
        raise WrongMode("daily decisions apply only to discretion sessions")
    if s.settled:
        raise SessionAlreadySettled("session already settled")
    if session_complete(s, cfg):
        raise OutOfTurn("all periods complete; awaiting settlement")
    price = series.close_at(s.starts[s.current_period] + s.current_day)
    portfolio, degraded = execute_trade(
        s.portfolio, action, price, cfg.lot_size, cfg.allow_negative_balances
    )
    record = TradeRecord(
        period=s.current_period,
        day=s.current_day,
        requested=action,
        executed=TradeAction.HOLD if degraded else action,
        price=price,
        degraded=degraded,
    )
    day, period = s.current_day + 1, s.current_period
    if day == cfg.period_len:
        day, period = 0, period + 1
    return replace(
        s,
        portfolio=portfolio,
        trade_log=s.trade_log + (record,),
        current_day=day,
        current_period=period,
    )


def choose_ai_strategy(
    s: SessionState, strategy: AiStrategy, series: PriceSeries, cfg: ExperimentConfig
) -> SessionState:
    """Commit a strategy for the current period and simulate it immediately.

    One choice per period; committing forgoes any further control until the
    period ends.
    """
    if s.mode is not SessionMode.AUTOMATED:
        raise WrongMode("strategy commitments apply only to automated sessions")
    if s.settled:
        raise SessionAlreadySettled("session already settled")
    if session_complete(s, cfg):
        raise PeriodAlreadyCommitted("all periods already committed")
    start = s.starts[s.current_period]
    prices = series.closes[start : start + cfg.period_len]
    portfolio, trades = run_period_automated(
        s.portfolio, strategy, prices, cfg, period=s.current_period
    )
    return replace(
        s,
        portfolio=portfolio,
        period_choices=s.period_choices + (strategy,),
        trade_log=s.trade_log + tuple(trades),
        current_period=s.current_period + 1,
        current_day=0,
    )


def settle_session(
    s: SessionState, series: PriceSeries, cfg: ExperimentConfig
) -> SessionState:
    """Close the session: ROI relative to the endowment valued at the close
    preceding the first trading day (the last day of the first chart)."""
    if s.settled:
        raise SessionAlreadySettled("session already settled")
    if not session_complete(s, cfg):
        raise SessionIncomplete(
            f"{s.current_period}/{cfg.periods_per_session} periods complete"
        )
    v0 = portfolio_value(initial_portfolio(cfg), series.close_at(s.starts[0] - 1))
    v_final = portfolio_value(
        s.portfolio, series.close_at(s.starts[-1] + cfg.period_len - 1)
    )
    return replace(s, settled=True, roi=(v_final - v0) / v0)


# --- subject-level transitions ---


def session_order(treatment: Treatment) -> tuple[SessionMode, SessionMode]:
    if treatment is Treatment.A:
        return (SessionMode.AUTOMATED, SessionMode.DISCRETION)
    return (SessionMode.DISCRETION, SessionMode.AUTOMATED)


def expected_mode(subj: SubjectState, session_no: int) -> Optional[SessionMode]:
    """Mode the given 1-based session must run in; None if not yet knowable."""
    if session_no in (1, 2):
        if subj.treatment is None:
            return None
        return session_order(subj.treatment)[session_no - 1]
    return subj.self_selected_mode


def self_select(subj: SubjectState, mode: SessionMode) -> SubjectState:
    """Record the subject's choice of mode for the third session.

    The third session itself opens later with a fresh endowment and a fresh
    start-date draw (draws happen at session start, outside the engine).
    """
    if len(subj.sessions) < 2 or not all(s.settled for s in subj.sessions[:2]):
        raise PrerequisiteSessionsIncomplete("sessions 1 and 2 must be settled first")
    if subj.self_selected_mode is not None:
        raise AlreadySelected(f"already selected {subj.self_selected_mode.value}")
    return replace(subj, self_selected_mode=mode)


def active_session(subj: SubjectState) -> Optional[SessionState]:
    """The started-but-unsettled session, if any."""
    if subj.sessions and not subj.sessions[-1].settled:
        return subj.sessions[-1]
    return None


def _allowed_actions(subj: SubjectState) -> list[str]:
    if subj.stage is Stage.LOC:
        return ["submit_loc"]
    if subj.stage is Stage.SURVEY:
        return ["submit_survey"]
    if subj.stage in SESSION_STAGES:
        if (
            subj.stage is Stage.SESSION3
            and subj.self_selected_mode is None
            and len(subj.sessions) == 2
        ):
            return ["select_mode"]
        current = active_session(subj)
        if current is None:
            return ["open_session"]
        if current.mode is SessionMode.AUTOMATED:
            return ["choose_strategy"]
        return ["submit_decision"]
    return []


def visible_state(
    subj: SubjectState, series: PriceSeries, cfg: ExperimentConfig
) -> dict:
    """Everything the subject may see right now, and nothing more.

    Mid-session: the current chart and the day/period counters, never
    balances. Balances and ROI appear only once the session has settled,
    and future prices are never included.
    """
    view: dict = {
        "subject_id": subj.subject_id,
        "stage": subj.stage.value,
        "treatment": subj.treatment.value if subj.treatment else None,
        "allowed_actions": _allowed_actions(subj),
        "session": None,
        "mode": None,
        "period": None,
        "day": None,
        "period_len": cfg.period_len,
        "periods_per_session": cfg.periods_per_session,
        "chart": None,
        "results": None,
    }
    if subj.stage in SESSION_STAGES:
        session_no = SESSION_STAGES.index(subj.stage) + 1
        view["session"] = session_no
        current = active_session(subj)
        if current is not None:
            view["mode"] = current.mode.value
            view["period"] = current.current_period
            view["day"] = current.current_day
            if not session_complete(current, cfg):
                decision_day = (
                    current.starts[current.current_period] + current.current_day
                )
                window = chart_window(series, decision_day, cfg.lookback)
                view["chart"] = {
                    "closes": list(window.closes),
                    "dates": [d.isoformat() for d in window.dates],
                    "end_date": window.end_date.isoformat(),
                }
        else:
            mode = expected_mode(subj, session_no)
            view["mode"] = mode.value if mode else None
    if active_session(subj) is None and any(s.settled for s in subj.sessions):
        view["results"] = [
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
    return view
