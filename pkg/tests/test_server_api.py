import pytest
from fastapi.testclient import TestClient

from conftest import SCRIPTS, make_service, varied_series
from ethgame.server.app import create_app

ADMIN = {"Authorization": "Bearer admintok"}


@pytest.fixture
def client(tmp_path):
    svc = make_service(tmp_path, series=varied_series())
    app = create_app(svc, admin_token="admintok")
    with TestClient(app) as c:
        c.service = svc
        yield c
    svc.close()


def register(client, name="Ada"):
    r = client.post("/subjects", json={"name": name})
    assert r.status_code == 201
    body = r.json()
    return body["subject_id"], {"Authorization": f"Bearer {body['token']}"}


def log_len(client):
    return client.service.log.next_seq - 1


def play_to_survey(client, sid, hdr):
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    for session_no in (1, 2, 3):
        if session_no == 3:
            r = client.post(
                f"/subjects/{sid}/selection", json={"mode": "Automated"}, headers=hdr
            )
            assert r.status_code == 200
        mode = client.get(f"/subjects/{sid}/chart", headers=hdr).json()["mode"]
        if mode == "Automated":
            for p in range(client.service.config.periods_per_session):
                r = client.post(
                    f"/subjects/{sid}/strategy",
                    json={"period": p, "strategy": "Long"},
                    headers=hdr,
                )
                assert r.status_code == 200, r.text
        else:
            for _ in range(client.service.config.session_days):
                r = client.post(
                    f"/subjects/{sid}/decision", json={"action": "Buy"}, headers=hdr
                )
                assert r.status_code == 200, r.text


def test_register_returns_identity(client):
    sid, hdr = register(client)
    assert sid == "s001"
    state = client.get(f"/subjects/{sid}/state", headers=hdr).json()
    assert state["stage"] == "LoC"
    assert state["treatment"] in ("A", "B")
    assert state["allowed_actions"] == ["submit_loc"]


def test_create_experiment_twice_conflicts(client):
    r = client.post("/experiments", headers=ADMIN)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "STATE_CONFLICT"


def test_auth_rejections(client):
    sid, hdr = register(client)
    assert client.get(f"/subjects/{sid}/state").status_code == 401
    bad = {"Authorization": "Bearer wrong"}
    assert client.get(f"/subjects/{sid}/state", headers=bad).status_code == 401
    assert client.get("/admin/export", headers=bad).status_code == 401
    assert client.get("/admin/progress").status_code == 401
    # one subject's token does not open another's state
    sid2, hdr2 = register(client, "Ben")
    assert client.get(f"/subjects/{sid2}/state", headers=hdr).status_code == 401


def test_unknown_subject_404(client):
    _, hdr = register(client)
    assert client.get("/subjects/s999/state", headers=hdr).status_code == 404


def test_malformed_bodies_422(client):
    sid, hdr = register(client)
    bad_bodies = [
        ("loc", {"answers": "yes"}),
        ("strategy", {"period": 0, "strategy": "Leveraged"}),
        ("decision", {"action": "Borrow"}),
        ("selection", {"mode": "Oracle"}),
        ("survey", {}),
    ]
    for endpoint, body in bad_bodies:
        r = client.post(f"/subjects/{sid}/{endpoint}", json=body, headers=hdr)
        assert r.status_code == 422, (endpoint, r.status_code)
    assert client.post("/subjects", json={"name": ""}).status_code == 422


def test_loc_items_listed(client):
    sid, hdr = register(client)
    items = client.get(f"/subjects/{sid}/loc", headers=hdr).json()["items"]
    assert len(items) == 20
    assert items[0]["id"] == 1 and items[0]["text"]


def test_loc_wrong_count_409_without_append(client):
    sid, hdr = register(client)
    before = log_len(client)
    r = client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 19}, headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "INCOMPLETE_RESPONSE"
    assert log_len(client) == before


def test_chart_starts_session_once(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [False] * 20}, headers=hdr)
    before = log_len(client)
    first = client.get(f"/subjects/{sid}/chart", headers=hdr).json()
    assert log_len(client) == before + 1  # SessionStarted appended
    again = client.get(f"/subjects/{sid}/chart", headers=hdr).json()
    assert log_len(client) == before + 1  # no second draw
    assert first == again
    assert len(first["closes"]) == client.service.config.lookback
    assert (first["period"], first["day"]) == (0, 0)


def test_state_get_never_starts_session(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    before = log_len(client)
    state = client.get(f"/subjects/{sid}/state", headers=hdr).json()
    assert log_len(client) == before
    assert state["stage"] == "Session1"
    assert state["allowed_actions"] == ["open_session"]
    assert state["chart"] is None


def test_wrong_mode_posts_conflict(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    mode = client.get(f"/subjects/{sid}/chart", headers=hdr).json()["mode"]
    wrong = (
        ("decision", {"action": "Buy"})
        if mode == "Automated"
        else ("strategy", {"period": 0, "strategy": "Long"})
    )
    before = log_len(client)
    r = client.post(f"/subjects/{sid}/{wrong[0]}", json=wrong[1], headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "WRONG_MODE"
    assert log_len(client) == before


def test_results_hidden_until_settled(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    client.get(f"/subjects/{sid}/chart", headers=hdr)
    r = client.get(f"/subjects/{sid}/results", headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "STATE_CONFLICT"


def test_pinned_decision_rejects_duplicate(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    mode = client.get(f"/subjects/{sid}/chart", headers=hdr).json()["mode"]
    if mode == "Automated":  # play session 1 to reach a discretion session
        for p in range(client.service.config.periods_per_session):
            client.post(
                f"/subjects/{sid}/strategy",
                json={"period": p, "strategy": "Holding"},
                headers=hdr,
            )
        client.get(f"/subjects/{sid}/chart", headers=hdr)
    body = {"action": "Buy", "period": 0, "day": 0}
    assert (
        client.post(f"/subjects/{sid}/decision", json=body, headers=hdr).status_code
        == 200
    )
    before = log_len(client)
    r = client.post(f"/subjects/{sid}/decision", json=body, headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "OUT_OF_TURN"
    assert log_len(client) == before


def test_pinned_strategy_rejects_duplicate(client):
    # find a subject whose first session is automated
    while True:
        sid, hdr = register(client)
        client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
        if client.get(f"/subjects/{sid}/chart", headers=hdr).json()["mode"] == "Automated":
            break
    body = {"period": 0, "strategy": "Long"}
    assert (
        client.post(f"/subjects/{sid}/strategy", json=body, headers=hdr).status_code
        == 200
    )
    before = log_len(client)
    r = client.post(f"/subjects/{sid}/strategy", json=body, headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "PERIOD_ALREADY_COMMITTED"
    assert log_len(client) == before


def test_selection_gating(client):
    sid, hdr = register(client)
    client.post(f"/subjects/{sid}/loc", json={"answers": [True] * 20}, headers=hdr)
    r = client.post(f"/subjects/{sid}/selection", json={"mode": "Automated"}, headers=hdr)
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "PREREQUISITE_SESSIONS_INCOMPLETE"


def test_full_flow_and_final_results(client):
    sid, hdr = register(client)
    play_to_survey(client, sid, hdr)
    state = client.get(f"/subjects/{sid}/state", headers=hdr).json()
    assert state["stage"] == "Survey"
    results = client.get(f"/subjects/{sid}/results", headers=hdr).json()["sessions"]
    assert [r["session"] for r in results] == [1, 2, 3]
    assert all(isinstance(r["roi"], float) for r in results)
    r = client.post(
        f"/subjects/{sid}/survey", json={"answers": [5] * 7}, headers=hdr
    )
    assert r.status_code == 200 and r.json()["stage"] == "Done"
    # a fourth session cannot be opened
    assert client.get(f"/subjects/{sid}/chart", headers=hdr).status_code == 409


def test_admin_export_and_progress(client):
    sid, hdr = register(client)
    play_to_survey(client, sid, hdr)
    client.post(f"/subjects/{sid}/survey", json={"answers": [5] * 7}, headers=hdr)
    tables = client.get("/admin/export", headers=ADMIN).json()["tables"]
    assert set(tables) == {"subjects", "loc", "decisions", "sessions", "survey"}
    assert tables["sessions"].count("\n") == 4  # header + 3 sessions
    progress = client.get("/admin/progress", headers=ADMIN).json()["subjects"]
    assert progress[0]["stage"] == "Done"
    assert progress[0]["sessions_settled"] == 3


def test_subjects_progress_independently(client):
    a, ha = register(client, "Ada")
    b, hb = register(client, "Ben")
    client.post(f"/subjects/{a}/loc", json={"answers": [True] * 20}, headers=ha)
    state_b = client.get(f"/subjects/{b}/state", headers=hb).json()
    assert state_b["stage"] == "LoC"
    state_a = client.get(f"/subjects/{a}/state", headers=ha).json()
    assert state_a["stage"] == "Session1"
