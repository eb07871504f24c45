import datetime

import pytest

from ethgame.engine import ExperimentConfig
from ethgame.instruments import DEFAULT_EXTERNAL_IDS
from ethgame.pricedata import PricePoint, PriceSeries, serialize_price_csv
from ethgame.server.service import ExperimentService


def make_series(closes, start="2021-01-01"):
    d0 = datetime.date.fromisoformat(start)
    return PriceSeries(
        points=tuple(
            PricePoint(date=d0 + datetime.timedelta(days=i), close=float(c))
            for i, c in enumerate(closes)
        )
    )


def flat_series(price, n):
    return make_series([price] * n)


@pytest.fixture
def default_config():
    return ExperimentConfig()


@pytest.fixture
def small_config():
    # shortest interesting game: 2 periods of 2 days, 3-day chart
    return ExperimentConfig(period_len=2, periods_per_session=2, lookback=3)


def varied_series(n=120, seed=3):
    import random

    rng = random.Random(seed)
    price = 700.0
    closes = []
    for _ in range(n):
        closes.append(round(price, 2))
        price *= 1.0 + rng.uniform(-0.03, 0.03)
    return make_series(closes)


def make_service(tmp_path, config=None, series=None, name="log.jsonl"):
    config = config or ExperimentConfig(seed=11)
    series = series if series is not None else varied_series()
    svc = ExperimentService(
        config,
        series,
        tmp_path / name,
        price_path="prices.csv",
        price_csv_text=serialize_price_csv(series),
    )
    if svc.record.config is None:
        svc.create_experiment()
    return svc


SCRIPTS = [
    {
        "name": "Ada",
        "loc": [True] * 20,
        "strategy": "Long",
        "action": "Buy",
        "selection": "Automated",
        "survey": [5, 6, 7, 4, 3, 5, 6],
    },
    {
        "name": "Ben",
        # affirms every externally keyed item: the maximum score
        "loc": [i + 1 in DEFAULT_EXTERNAL_IDS for i in range(20)],
        "strategy": "Holding",
        "action": "Hold",
        "selection": "Discretion",
        "survey": [7] * 7,
    },
    {
        "name": "Cyn",
        "loc": [True] * 19 + [False],
        "strategy": "Short",
        "action": "Sell",
        "selection": "Automated",
        "survey": [1, 2, 3, 4, 5, 6, 7],
    },
]


def play_session(svc, sid, script):
    cfg = svc.config
    view = svc.chart(sid)
    if view["mode"] == "Automated":
        for period in range(cfg.periods_per_session):
            svc.choose_strategy(sid, period, script["strategy"])
    else:
        for _ in range(cfg.session_days):
            svc.submit_decision(sid, script["action"])


def drive_full_flow(svc, script):
    reg = svc.register_subject(script["name"])
    sid = reg["subject_id"]
    svc.submit_loc(sid, script["loc"])
    play_session(svc, sid, script)
    play_session(svc, sid, script)
    svc.select_mode(sid, script["selection"])
    play_session(svc, sid, script)
    svc.submit_survey(sid, script["survey"])
    return sid


def scripted_experiment(tmp_path, n_subjects=3, config=None, series=None):
    svc = make_service(tmp_path, config=config, series=series)
    sids = [
        drive_full_flow(svc, SCRIPTS[i % len(SCRIPTS)]) for i in range(n_subjects)
    ]
    return svc, sids
