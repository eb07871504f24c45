"""Error types shared across the package.

Every error carries a stable ``code`` string so the HTTP layer and the CLI
can report machine-readable reasons without string-matching messages.
"""

from __future__ import annotations


class GameError(Exception):
    """Base class for all domain errors."""

    code = "GAME_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- price data ---

class MalformedRow(GameError):
    code = "MALFORMED_ROW"


class NonMonotonicDates(GameError):
    code = "NON_MONOTONIC_DATES"


class NonPositivePrice(GameError):
    code = "NON_POSITIVE_PRICE"


class SeriesTooShort(GameError):
    code = "SERIES_TOO_SHORT"


class InsufficientHistory(GameError):
    code = "INSUFFICIENT_HISTORY"


# --- engine ---

class PriceCountMismatch(GameError):
    code = "PRICE_COUNT_MISMATCH"


class WrongMode(GameError):
    code = "WRONG_MODE"


class SessionAlreadySettled(GameError):
    code = "SESSION_SETTLED"


class OutOfTurn(GameError):
    code = "OUT_OF_TURN"


class PeriodAlreadyCommitted(GameError):
    code = "PERIOD_ALREADY_COMMITTED"


class SessionIncomplete(GameError):
    code = "SESSION_INCOMPLETE"


class PrerequisiteSessionsIncomplete(GameError):
    code = "PREREQUISITE_SESSIONS_INCOMPLETE"


class AlreadySelected(GameError):
    code = "ALREADY_SELECTED"


# --- instruments ---

class IncompleteResponse(GameError):
    code = "INCOMPLETE_RESPONSE"


class EmptyResponseSet(GameError):
    code = "EMPTY_RESPONSE_SET"


# --- event log / server ---

class StateConflict(GameError):
    code = "STATE_CONFLICT"


class CorruptLog(GameError):
    code = "CORRUPT_LOG"


# --- analysis ---

class NoPairedSubjects(GameError):
    code = "NO_PAIRED_SUBJECTS"


class NoEligibleSubjects(GameError):
    code = "NO_ELIGIBLE_SUBJECTS"


class ZeroVariance(GameError):
    code = "ZERO_VARIANCE"


class InsufficientN(GameError):
    code = "INSUFFICIENT_N"
