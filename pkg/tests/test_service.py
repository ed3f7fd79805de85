from __future__ import annotations

import json
import threading
import time
from urllib.parse import parse_qs, urlparse

import pytest
from fastapi.testclient import TestClient

from chatbench.bots import BotGateway, ScriptedBot
from chatbench.config import parse_task_config
from chatbench.service import create_app
from chatbench.storage import SqliteStore
from chatbench.topics import load_topics

from conftest import TOPICS_SEEDED, config_text, fixed_clock, sequential_ids

ADMIN = ("root", "admin-secret")
GOOD_ANSWERS = {"coherence": "4 - Mostly", "feedback": "solid"}


def make_app(*, config=None, topics_text=TOPICS_SEEDED, script=("r1", "r2", "r3"),
             store=None, poll_window=2.0, message_cap=1000, extra_yaml="", **kwargs):
    cfg = parse_task_config((config or config_text()) + extra_yaml)
    gateway = BotGateway(sleeper=lambda s: None)
    gateway.register_local("guide", ScriptedBot(list(script)))
    app = create_app(cfg, load_topics(topics_text),
                     store=store or SqliteStore(":memory:"),
                     gateway=gateway, bot_runner="inline", poll_window=poll_window,
                     message_cap_per_session=message_cap,
                     clock=fixed_clock, id_factory=sequential_ids(),
                     admin_credentials=ADMIN, **kwargs)
    return app


def admin_client(app, prefix="") -> TestClient:
    client = TestClient(app)
    response = client.post(f"{prefix}/api/login",
                           json={"user_id": ADMIN[0], "secret": ADMIN[1]})
    assert response.status_code == 200, response.text
    return client


def worker_client(app, user_id, prefix="") -> TestClient:
    client = TestClient(app)
    response = client.post(f"{prefix}/api/signup",
                           json={"user_id": user_id, "secret": "pw"})
    assert response.status_code == 200, response.text
    return client


def launch_threads(admin, topic_id="heated-thread", count=1, prefix="", **params):
    response = admin.post(f"{prefix}/api/admin/topics/{topic_id}/launch",
                          json={"count": count, **params})
    assert response.status_code == 200, response.text
    report = response.json()["results"][0]
    assert report["ok"], report
    return report["thread_ids"]


def land(worker, prefix="") -> str:
    response = worker.get(f"{prefix}/landing", follow_redirects=False)
    assert response.status_code == 303, response.text
    location = response.headers["location"]
    assert "/threads/" in location
    return location.rsplit("/", 1)[-1]


# --- sessions and auth -------------------------------------------------------

def test_signup_login_whoami():
    app = make_app()
    client = worker_client(app, "alice")
    who = client.get("/api/session").json()
    assert who == {"user_id": "alice", "role": "worker", "consent_ok": True}

    fresh = TestClient(app)
    assert fresh.get("/api/session").status_code == 401
    assert fresh.post("/api/login", json={"user_id": "alice", "secret": "wrong"}).status_code == 401
    assert fresh.post("/api/login", json={"user_id": "alice", "secret": "pw"}).status_code == 200


def test_duplicate_signup_rejected():
    app = make_app()
    worker_client(app, "alice")
    fresh = TestClient(app)
    assert fresh.post("/api/signup", json={"user_id": "alice", "secret": "x"}).status_code == 409


# --- consent gating -------------------------------------------------------------

def onboarded_app(tmp_path, **kwargs):
    agreement = tmp_path / "consent.html"
    agreement.write_text("<h1>Agreement</h1>", encoding="utf-8")
    extra = f"\nonboarding:\n  agreement_file: {agreement}\n  checkbox_texts: [I consent, I am an adult]\n"
    return make_app(extra_yaml=extra, **kwargs)


def test_consent_required_before_thread_routes(tmp_path):
    app = onboarded_app(tmp_path)
    admin = admin_client(app)
    thread_id = launch_threads(admin)[0]
    worker = worker_client(app, "alice")
    assert worker.get("/api/session").json()["consent_ok"] is False
    assert worker.get(f"/api/threads/{thread_id}/updates").status_code == 403

    partial = worker.post("/api/consent", json={"checked": [True, False]})
    assert partial.status_code == 400
    assert partial.json()["error"]["details"]["unchecked"] == [1]

    full = worker.post("/api/consent", json={"checked": [True, True]})
    assert full.status_code == 200
    thread = land(worker)
    assert worker.get(f"/api/threads/{thread}/updates").status_code == 200


def test_returning_consented_user_skips_gate(tmp_path):
    store = SqliteStore(":memory:")
    app = onboarded_app(tmp_path, store=store)
    worker = worker_client(app, "alice")
    worker.post("/api/consent", json={"checked": [True, True]})
    # Fresh login later: the stored acceptance carries over.
    again = TestClient(app)
    again.post("/api/login", json={"user_id": "alice", "secret": "pw"})
    assert again.get("/api/session").json()["consent_ok"] is True
    assert store.get_user("alice").agreement_accepted_at is not None


def test_agreement_page_serves_document(tmp_path):
    app = onboarded_app(tmp_path)
    client = TestClient(app)
    response = client.get("/agreement")
    assert response.status_code == 200
    assert "<h1>Agreement</h1>" in response.text


# --- evaluator flow ----------------------------------------------------------------

def test_full_evaluation_flow_over_http():
    app = make_app()
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)

    first = worker.get(f"/api/threads/{thread_id}/updates?since=0").json()
    assert [m["seq"] for m in first["messages"]] == [1, 2]
    assert first["state"] == "Active"
    assert first["your_turn"] is True
    assert first["remaining_turns"] == 3
    assert first["survey_open"] is False

    seen = 2
    for i in range(3):
        posted = worker.post(f"/api/threads/{thread_id}/messages",
                             json={"text": f"message {i + 1}"})
        assert posted.status_code == 200
        delta = worker.get(f"/api/threads/{thread_id}/updates?since={seen}").json()
        texts = [m["text"] for m in delta["messages"]]
        assert texts == [f"message {i + 1}", f"r{i + 1}"]
        seen = delta["messages"][-1]["seq"]

    unlocked = worker.get(f"/api/threads/{thread_id}/updates?since={seen}").json()
    assert unlocked["survey_open"] is True
    assert unlocked["state"] == "RatingOpen"
    assert unlocked["remaining_turns"] == 0

    bad = worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": {}})
    assert bad.status_code == 400
    assert bad.json()["error"]["code"] == "validation_failed"

    done = worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})
    assert done.status_code == 200
    assert done.json()["state"] == "Completed"


def test_updates_on_waiting_thread_with_four_seeds():
    topics = json.dumps([{
        "id": "quad", "name": "Four seeds",
        "seed_turns": [{"speaker": f"s{i}", "text": f"seed {i}"} for i in range(4)],
    }])
    app = make_app(topics_text=topics, config=config_text(humans=2, policy="round_robin"))
    admin = admin_client(app)
    thread_id = launch_threads(admin, topic_id="quad")[0]
    delta = admin.get(f"/api/threads/{thread_id}/updates?since=0").json()
    assert len(delta["messages"]) == 4
    assert all(m["is_seed"] for m in delta["messages"])
    assert delta["state"] == "WaitingForHumans"


def test_updates_error_codes():
    app = make_app()
    admin = admin_client(app)
    thread_id = launch_threads(admin)[0]
    worker = worker_client(app, "alice")
    land(worker)
    outsider = worker_client(app, "mallory")

    anonymous = TestClient(app)
    assert anonymous.get(f"/api/threads/{thread_id}/updates").status_code == 401
    assert outsider.get(f"/api/threads/{thread_id}/updates").status_code == 403
    assert worker.get("/api/threads/ghost/updates").status_code == 404


def test_admin_can_observe_any_thread():
    app = make_app()
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    worker.post(f"/api/threads/{thread_id}/messages", json={"text": "hello"})
    delta = admin.get(f"/api/threads/{thread_id}/updates?since=0").json()
    assert len(delta["messages"]) == 4  # 2 seeds + human + bot
    assert delta["your_turn"] is False
    page = admin.get(f"/threads/{thread_id}")
    assert page.status_code == 200


def test_long_poll_returns_early_on_new_message():
    app = make_app(poll_window=5.0)
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)

    def post_later():
        time.sleep(0.3)
        worker.post(f"/api/threads/{thread_id}/messages", json={"text": "wake"})

    poker = threading.Thread(target=post_later)
    observer = admin_client(app)
    poker.start()
    started = time.monotonic()
    delta = observer.get(f"/api/threads/{thread_id}/updates?since=2&wait=1").json()
    elapsed = time.monotonic() - started
    poker.join()
    assert [m["text"] for m in delta["messages"]][:1] == ["wake"]
    assert elapsed < 4.0


def test_long_poll_times_out_quietly():
    app = make_app(poll_window=0.2)
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    delta = worker.get(f"/api/threads/{thread_id}/updates?since=2&wait=1").json()
    assert delta["messages"] == []
    assert delta["state"] == "Active"


def test_message_cap_enforced():
    app = make_app(message_cap=2, config=config_text(turns=3, allow_after=True))
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    for i in range(2):
        assert worker.post(f"/api/threads/{thread_id}/messages",
                           json={"text": f"m{i}"}).status_code == 200
    assert worker.post(f"/api/threads/{thread_id}/messages",
                       json={"text": "m3"}).status_code == 429


def test_worker_limit_over_http():
    app = make_app(config=config_text(turns=0, max_per_worker=2))
    admin = admin_client(app)
    launch_threads(admin, count=3)
    worker = worker_client(app, "alice")
    for _ in range(2):
        thread_id = land(worker)
        done = worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})
        assert done.json()["state"] == "Completed"
    blocked = worker.get("/landing", follow_redirects=False)
    assert blocked.status_code == 409
    other = worker_client(app, "bob")
    land(other)


def test_landing_without_open_threads():
    app = make_app()
    worker = worker_client(app, "alice")
    response = worker.get("/landing", follow_redirects=False)
    assert response.status_code == 404


def test_thread_page_embeds_render_model():
    app = make_app()
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    page = worker.get(f"/threads/{thread_id}")
    assert page.status_code == 200
    assert "window.CHATBENCH" in page.text
    assert '"kind": "likert"' in page.text or '"kind":"likert"' in page.text


# --- authorization matrix ---------------------------------------------------------

ADMIN_ROUTES = [
    ("GET", "/api/admin/topics", None),
    ("POST", "/api/admin/topics/heated-thread/launch", {"count": 1}),
    ("POST", "/api/admin/batch", {"action": "delete", "ids": []}),
    ("POST", "/api/admin/threads/delete", {"ids": []}),
    ("GET", "/api/admin/threads", None),
    ("GET", "/api/admin/threads/x/export", None),
    ("POST", "/api/admin/workers/w/qualifications", {"name": "q"}),
    ("DELETE", "/api/admin/workers/w/qualifications?name=q", None),
    ("POST", "/api/admin/workers/w/bonus",
     {"assignment_id": "a", "amount": "0.5", "reason": "r"}),
]


@pytest.mark.parametrize("method,route,body", ADMIN_ROUTES)
def test_workers_cannot_reach_admin_routes(method, route, body):
    app = make_app()
    worker = worker_client(app, "alice")
    response = worker.request(method, route, json=body)
    assert response.status_code == 403

    anonymous = TestClient(app)
    assert anonymous.request(method, route, json=body).status_code == 401


def test_unconsented_sessions_cannot_reach_thread_routes(tmp_path):
    app = onboarded_app(tmp_path)
    admin = admin_client(app)
    thread_id = launch_threads(admin)[0]
    worker = worker_client(app, "alice")
    for method, route, body in [
        ("GET", f"/api/threads/{thread_id}", None),
        ("GET", f"/api/threads/{thread_id}/updates", None),
        ("POST", f"/api/threads/{thread_id}/messages", {"text": "hi"}),
        ("POST", f"/api/threads/{thread_id}/ratings", {"answers": {}}),
        ("GET", f"/threads/{thread_id}", None),
    ]:
        assert worker.request(method, route, json=body).status_code == 403, route


# --- admin management ----------------------------------------------------------------

def test_admin_topics_table():
    app = make_app()
    admin = admin_client(app)
    launch_threads(admin, count=2)
    table = admin.get("/api/admin/topics").json()["topics"]
    entry = next(t for t in table if t["id"] == "heated-thread")
    assert entry["threads_created"] == 2
    assert entry["seed_turn_count"] == 2
    assert entry["name"] == "Heated policy debate"


def test_batch_launch_and_delete():
    topics = json.dumps([{"id": f"t{i}"} for i in range(3)])
    app = make_app(topics_text=topics)
    admin = admin_client(app)
    report = admin.post("/api/admin/batch", json={
        "action": "launch", "ids": ["t0", "t1", "t2"], "params": {"count": 2}}).json()
    assert all(r["ok"] for r in report["results"])
    created = [tid for r in report["results"] for tid in r["thread_ids"]]
    assert len(created) == 6

    mixed = admin.post("/api/admin/threads/delete",
                       json={"ids": [created[0], "ghost", created[1]]}).json()
    outcomes = {r["id"]: r["ok"] for r in mixed["results"]}
    assert outcomes == {created[0]: True, "ghost": False, created[1]: True}

    listed = admin.get("/api/admin/threads?state=Deleted").json()["threads"]
    assert {t["id"] for t in listed} == {created[0], created[1]}


def test_deleting_completed_thread_keeps_export():
    app = make_app(config=config_text(turns=0))
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})

    deleted = admin.post("/api/admin/threads/delete", json={"ids": [thread_id]}).json()
    assert deleted["results"][0]["ok"] is True
    export = admin.get(f"/api/admin/threads/{thread_id}/export")
    assert export.status_code == 200
    assert export.headers["content-disposition"].startswith("attachment")
    assert json.loads(export.text)["thread"]["state"] == "Deleted"


def test_launch_respects_topic_cap():
    app = make_app(extra_yaml="\nlimits:\n  max_threads_per_topic: 2\n")
    admin = admin_client(app)
    launch_threads(admin, count=2)
    report = admin.post("/api/admin/topics/heated-thread/launch", json={"count": 1}).json()
    assert report["results"][0]["ok"] is False
    assert report["results"][0]["error"]["code"] == "limit_exceeded"


def test_launch_forwards_bot_params_and_worker_limit():
    app = make_app(config=config_text(turns=0))
    admin = admin_client(app)
    launch_threads(admin, count=2, bot_params={"persona": "socratic"}, max_per_worker=1)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})
    assert worker.get("/landing", follow_redirects=False).status_code == 409


def test_export_matches_store_document():
    app = make_app()
    admin = admin_client(app)
    launch_threads(admin)
    worker = worker_client(app, "alice")
    thread_id = land(worker)
    via_api = admin.get(f"/api/admin/threads/{thread_id}/export").text
    via_store = app.state.core.store.export_thread(thread_id, include_deleted=True)
    assert via_api == via_store


# --- crowd mode -------------------------------------------------------------------------

CROWD_YAML = "\ncrowd:\n  platform: mock_mturk\n  reward: '0.50'\n  title: Chat study\n  description: Talk to a bot.\n"


def crowd_app(**kwargs):
    return make_app(extra_yaml=CROWD_YAML, config=config_text(turns=0), **kwargs)


def entry_query(handle_url: str) -> dict:
    return {k: v[0] for k, v in parse_qs(urlparse(handle_url).query).items()}


def test_crowd_launch_publishes_tasks_with_entry_urls():
    app = crowd_app()
    admin = admin_client(app)
    response = admin.post("/api/admin/topics/heated-thread/launch", json={"count": 2}).json()
    handles = response["results"][0]["task_handles"]
    assert len(handles) == 2
    assert all("/landing?hitId=" in h["entry_url"] for h in handles)


def test_crowd_worker_auto_signup_and_completion():
    app = crowd_app()
    admin = admin_client(app)
    report = admin.post("/api/admin/topics/heated-thread/launch", json={"count": 1}).json()
    handle = report["results"][0]["task_handles"][0]
    assert urlparse(handle["entry_url"]).path == "/landing"
    hit_id = entry_query(handle["entry_url"])["hitId"]

    worker = TestClient(app)
    landing = worker.get(f"/landing?workerId=W1&assignmentId=A1&hitId={hit_id}",
                         follow_redirects=False)
    assert landing.status_code == 303
    thread_id = landing.headers["location"].rsplit("/", 1)[-1]

    core = app.state.core
    user = core.store.get_user_by_ext("W1")
    assert user is not None and user.secret_hash is None

    done = worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})
    assert done.json()["state"] == "Completed"
    assert done.json()["assignment"] == {"assignment_id": "A1", "hit_id": hit_id}
    assert core.store.get_assignment("A1").status == "submitted"


def test_preview_sentinel_shows_readonly_preview():
    app = crowd_app()
    client = TestClient(app)
    response = client.get("/landing?workerId=W1&assignmentId=ASSIGNMENT_ID_NOT_AVAILABLE&hitId=H1")
    assert response.status_code == 200
    assert "read-only preview" in response.text
    assert "set-cookie" not in response.headers


def test_bonus_and_qualification_endpoints():
    app = crowd_app()
    admin = admin_client(app)
    report = admin.post("/api/admin/topics/heated-thread/launch", json={"count": 1}).json()
    hit_id = entry_query(report["results"][0]["task_handles"][0]["entry_url"])["hitId"]
    worker = TestClient(app)
    landing = worker.get(f"/landing?workerId=W1&assignmentId=A1&hitId={hit_id}",
                         follow_redirects=False)
    thread_id = landing.headers["location"].rsplit("/", 1)[-1]
    worker.post(f"/api/threads/{thread_id}/ratings", json={"answers": GOOD_ANSWERS})

    assigned = admin.post("/api/admin/workers/W1/qualifications", json={"name": "trusted"})
    assert assigned.json()["qualifications"] == ["trusted"]
    revoked = admin.request("DELETE", "/api/admin/workers/W1/qualifications?name=trusted")
    assert revoked.json()["qualifications"] == []

    bonus = {"assignment_id": "A1", "amount": "0.75", "reason": "careful work",
             "idempotency_key": "K1"}
    first = admin.post("/api/admin/workers/W1/bonus", json=bonus).json()
    second = admin.post("/api/admin/workers/W1/bonus", json=bonus).json()
    assert first == second
    ledger = app.state.core.store.ledger_entries()
    assert len([e for e in ledger if e.action == "bonus"]) == 1


def test_deleting_thread_expires_its_crowd_task():
    app = crowd_app()
    admin = admin_client(app)
    report = admin.post("/api/admin/topics/heated-thread/launch", json={"count": 1}).json()
    item = report["results"][0]
    thread_id = item["thread_ids"][0]
    hit_id = item["task_handles"][0]["hit_id"]
    admin.post("/api/admin/threads/delete", json={"ids": [thread_id]})
    assert app.state.core.store.get_crowd_task(hit_id).status == "expired"


# --- instance isolation ----------------------------------------------------------------

def test_instances_share_nothing():
    app_one = make_app(extra_yaml="\ninstance:\n  tcp_port: 8101\n  path_prefix: /run1\n")
    app_two = make_app(extra_yaml="\ninstance:\n  tcp_port: 8102\n  path_prefix: /run2\n")
    admin_one = admin_client(app_one, prefix="/run1")
    launch_threads(admin_one, prefix="/run1")

    admin_two = admin_client(app_two, prefix="/run2")
    listed = admin_two.get("/run2/api/admin/threads").json()["threads"]
    assert listed == []
    assert admin_one.get("/run1/api/admin/threads").json()["threads"] != []


def test_path_prefix_routes_work_end_to_end():
    app = make_app(extra_yaml="\ninstance:\n  tcp_port: 8103\n  path_prefix: /study\n")
    admin = admin_client(app, prefix="/study")
    launch_threads(admin, prefix="/study")
    worker = worker_client(app, "alice", prefix="/study")
    thread_id = land(worker, prefix="/study")
    delta = worker.get(f"/study/api/threads/{thread_id}/updates?since=0").json()
    assert delta["state"] == "Active"
