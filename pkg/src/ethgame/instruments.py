"""Subject instruments: the 20-item locus-of-control test and the
7-question, 7-point agreement survey.

The locus-of-control instrument ships with a default scoring key
(``DEFAULT_EXTERNAL_IDS``). The key is data, not behavior: instructors can
override it in the experiment config without touching code. The keying of a
few items (2, 5, 14, 16) is a judgment call from face content, not an
authoritative fact; see README.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import EmptyResponseSet, IncompleteResponse

LOC_ITEM_COUNT = 20
SURVEY_QUESTION_COUNT = 7
SURVEY_SCALE_MIN = 1
SURVEY_SCALE_MAX = 7
# answers 5-7 = somewhat/very/extremely agree
TOP_BOX_THRESHOLD = 5


class Keying(str, Enum):
    INTERNAL = "Internal"
    EXTERNAL = "External"


@dataclass(frozen=True)
class LocItem:
    id: int
    text: str
    keying: Keying


_LOC_TEXTS = [
    "I usually get what I want in life.",
    "I need to be kept informed about news events.",
    "I never know where I stand with other people.",
    "I do not really believe in luck or chance.",
    "I think that I could easily win the lottery.",
    "If I do not succeed in a task, I tend to give up.",
    "I usually convince others to do things my way.",
    "People make a difference in controlling crime.",
    "The success I have is largely a matter of chance.",
    "Marriage is largely a gamble for most people.",
    "People must be the master of their own fate.",
    "It is not important for me to vote.",
    "My life seems like a series of random events.",
    "I never try anything that I am not sure of.",
    "I earn the respect and honors I receive.",
    "A person can get rich by taking risks.",
    "Leaders are successful when they work hard.",
    "Persistence and hard work usually lead to success.",
    "It is difficult to know who my real friends are.",
    "Other people usually control my life.",
]

DEFAULT_EXTERNAL_IDS = frozenset({3, 5, 6, 9, 10, 12, 13, 14, 19, 20})


def loc_items(external_ids: Iterable[int] = DEFAULT_EXTERNAL_IDS) -> list[LocItem]:
    """The 20 statements with their keying under the given (default) key."""
    external = frozenset(external_ids)
    return [
        LocItem(
            id=i,
            text=text,
            keying=Keying.EXTERNAL if i in external else Keying.INTERNAL,
        )
        for i, text in enumerate(_LOC_TEXTS, start=1)
    ]


def score_loc(
    answers: Sequence[bool], external_ids: Iterable[int] = DEFAULT_EXTERNAL_IDS
) -> int:
    """Count of externally-oriented answers, 0-20; higher = more external.

    True on an external item counts 1; False on an internal item counts 1.
    """
    if len(answers) != LOC_ITEM_COUNT or any(a is None for a in answers):
        raise IncompleteResponse(
            f"expected {LOC_ITEM_COUNT} answers, got {len(answers)}"
        )
    external = frozenset(external_ids)
    score = 0
    for item_id, answer in enumerate(answers, start=1):
        if (item_id in external) == bool(answer):
            score += 1
    return score


def aggregate_likert(responses: Sequence[Sequence[int]]) -> list[dict]:
    """Per-question top-3-box (answers >= 5) and bottom-4-box percentages.

    Each response is a sequence of 7 integers in 1..7. Percentages are
    rounded to 2 decimals.
    """
    if not responses:
        raise EmptyResponseSet("no survey responses")
    for r in responses:
        if len(r) != SURVEY_QUESTION_COUNT:
            raise IncompleteResponse(
                f"expected {SURVEY_QUESTION_COUNT} answers, got {len(r)}"
            )
        for v in r:
            if not (SURVEY_SCALE_MIN <= int(v) <= SURVEY_SCALE_MAX):
                raise IncompleteResponse(f"answer {v} outside 1..7")
    n = len(responses)
    rows = []
    for q in range(SURVEY_QUESTION_COUNT):
        top = sum(1 for r in responses if int(r[q]) >= TOP_BOX_THRESHOLD)
        top3 = 100.0 * top / n
        rows.append(
            {
                "question": q + 1,
                "n": n,
                "top3_count": top,
                "top3_pct": round(top3, 2),
                "bottom4_pct": round(100.0 - top3, 2),
            }
        )
    return rows
