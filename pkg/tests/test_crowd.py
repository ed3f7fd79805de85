from __future__ import annotations

from decimal import Decimal

import pytest

from chatbench.crowd import (
    EntryParams,
    MockMturkClient,
    NoPlatformClient,
    PREVIEW_SENTINEL,
    build_crowd_client,
    parse_entry,
    replay_ledger,
)
from chatbench.errors import (
    ConfigError,
    LedgerAppendFailed,
    NonPositiveAmount,
    PlatformRejected,
    UnknownAssignment,
    UnknownWorker,
)
from chatbench.model import AssignmentRecord, ChatThread, ThreadState
from chatbench.storage import SqliteStore

from conftest import FIXED_TIME, add_worker, fixed_clock, sequential_ids


@pytest.fixture
def store():
    return SqliteStore(":memory:")


@pytest.fixture
def mock_client(store):
    return MockMturkClient(store, clock=fixed_clock, id_factory=sequential_ids("hit"))


def seed_assignment(store, worker="alice", assignment_id="A1", status="submitted"):
    add_worker(store, worker)
    store.create_thread(ChatThread(id="th-1", topic_id="t1", state=ThreadState.COMPLETED,
                                   config_ref="task", created_at=FIXED_TIME))
    store.create_assignment(AssignmentRecord(thread_id="th-1", user_id=worker,
                                             ext_assignment_id=assignment_id,
                                             ext_hit_id="H1", status=status))


# --- publishing ---------------------------------------------------------------

def test_publish_five_tasks_five_handles_five_ledger_entries(mock_client, store):
    handles = mock_client.publish_task("t1", 5, entry_base="http://host:8080/run1")
    assert len(handles) == 5
    assert len(store.ledger_entries()) == 5
    assert all(h.entry_url.startswith("http://host:8080/run1/landing?hitId=hit-") for h in handles)
    assert store.get_crowd_task(handles[0].hit_id).topic_id == "t1"


def test_publish_without_platform_is_a_config_error(store):
    client = NoPlatformClient(store)
    with pytest.raises(ConfigError):
        client.publish_task("t1", 1, entry_base="http://host")


def test_publish_can_be_rejected_for_tests(store):
    client = MockMturkClient(store, fail_publishes=True)
    with pytest.raises(PlatformRejected):
        client.publish_task("t1", 1, entry_base="http://host")
    assert store.ledger_entries() == []


def test_expire_task_marks_and_logs(mock_client, store):
    handle = mock_client.publish_task("t1", 1, entry_base="http://host")[0]
    mock_client.expire_task(handle.hit_id)
    assert store.get_crowd_task(handle.hit_id).status == "expired"
    assert store.ledger_entries()[-1].action == "expire"


# --- entry parsing --------------------------------------------------------------

def test_parse_entry_full_params():
    params = parse_entry({"workerId": "W1", "assignmentId": "A1", "hitId": "H1"})
    assert params == EntryParams(worker_id="W1", assignment_id="A1", hit_id="H1", preview=False)


def test_parse_entry_preview_sentinel():
    params = parse_entry({"workerId": "W1", "assignmentId": PREVIEW_SENTINEL, "hitId": "H1"})
    assert params.preview is True
    assert params.assignment_id is None


def test_parse_entry_anonymous():
    assert parse_entry({}) is None


# --- qualifications ------------------------------------------------------------

def test_assign_then_revoke_restores_prior_set(mock_client, store):
    add_worker(store, "alice")
    before = store.get_user("alice").qualifications
    mock_client.assign_qualification("alice", "trusted")
    assert store.get_user("alice").qualifications == before | {"trusted"}
    mock_client.revoke_qualification("alice", "trusted")
    assert store.get_user("alice").qualifications == before


def test_assign_twice_is_idempotent_in_mirror_but_both_logged(mock_client, store):
    add_worker(store, "alice")
    mock_client.assign_qualification("alice", "trusted")
    mock_client.assign_qualification("alice", "trusted")
    assert store.get_user("alice").qualifications == frozenset({"trusted"})
    assert len([e for e in store.ledger_entries() if e.action == "assign_qualification"]) == 2


def test_assign_unknown_worker(mock_client):
    with pytest.raises(UnknownWorker):
        mock_client.assign_qualification("ghost", "trusted")


# --- bonuses ----------------------------------------------------------------------

def test_first_bonus_appends_one_entry(mock_client, store):
    seed_assignment(store)
    ack = mock_client.grant_bonus("alice", "A1", Decimal("0.50"), "fast work", "K1")
    entries = [e for e in store.ledger_entries() if e.action == "bonus"]
    assert len(entries) == 1
    assert entries[0].amount == Decimal("0.50")
    assert ack.idempotency_key == "K1"


def test_repeat_bonus_returns_original_ack_and_appends_nothing(mock_client, store):
    seed_assignment(store)
    first = mock_client.grant_bonus("alice", "A1", Decimal("0.50"), "fast work", "K1")
    second = mock_client.grant_bonus("alice", "A1", Decimal("0.50"), "fast work", "K1")
    assert first == second
    assert len([e for e in store.ledger_entries() if e.action == "bonus"]) == 1


def test_zero_bonus_rejected(mock_client, store):
    seed_assignment(store)
    with pytest.raises(NonPositiveAmount):
        mock_client.grant_bonus("alice", "A1", Decimal("0"), "none", "K2")


def test_bonus_requires_submitted_assignment(mock_client, store):
    seed_assignment(store, status="open")
    with pytest.raises(UnknownAssignment):
        mock_client.grant_bonus("alice", "A1", Decimal("0.50"), "early", "K3")


def test_approve_assignment(mock_client, store):
    seed_assignment(store)
    mock_client.approve_assignment("A1")
    assert store.get_assignment("A1").status == "approved"
    assert store.ledger_entries()[-1].action == "approve_assignment"


# --- ledger guarantees ---------------------------------------------------------------

def test_no_standing_change_without_ledger_entry(mock_client, store, monkeypatch):
    add_worker(store, "alice")

    def refuse(*args, **kwargs):
        raise LedgerAppendFailed("disk full")

    monkeypatch.setattr(store, "append_ledger", refuse)
    with pytest.raises(LedgerAppendFailed):
        mock_client.assign_qualification("alice", "trusted")
    assert store.get_user("alice").qualifications == frozenset()


def test_ledger_replay_reproduces_mirror(mock_client, store):
    add_worker(store, "alice")
    add_worker(store, "bob")
    seed_assignment(store, worker="carol", assignment_id="A9")
    mock_client.assign_qualification("alice", "trusted")
    mock_client.assign_qualification("alice", "fast")
    mock_client.assign_qualification("bob", "trusted")
    mock_client.revoke_qualification("alice", "fast")
    mock_client.grant_bonus("carol", "A9", Decimal("0.75"), "great", "K1")
    mock_client.grant_bonus("carol", "A9", Decimal("0.75"), "great", "K1")  # duplicate
    mock_client.grant_bonus("carol", "A9", Decimal("0.25"), "extra", "K2")

    replayed = replay_ledger(store.ledger_entries())
    assert replayed["qualifications"]["alice"] == store.get_user("alice").qualifications
    assert replayed["qualifications"]["bob"] == store.get_user("bob").qualifications
    assert replayed["bonus_totals"]["carol"] == Decimal("1.00")
    assert set(replayed["bonus_keys"]) == {"K1", "K2"}


def test_ledger_exports_as_json(mock_client, store):
    import json

    from chatbench.crowd import export_ledger

    add_worker(store, "alice")
    mock_client.assign_qualification("alice", "trusted")
    document = json.loads(export_ledger(store))
    assert document["ledger_version"] == 1
    assert document["entries"][0]["action"] == "assign_qualification"
    assert document["entries"][0]["at"] == "2024-05-01T12:00:00Z"
    assert export_ledger(store) == export_ledger(store)


def test_build_crowd_client_by_platform(store):
    assert build_crowd_client("mock_mturk", store).platform == "mock_mturk"
    assert build_crowd_client("external_url", store).platform == "external_url"
    assert build_crowd_client("none", store).platform == "none"


def test_external_url_publish_is_recorded_noop(store):
    client = build_crowd_client("external_url", store)
    assert client.publish_task("t1", 3, entry_base="http://host") == []
    assert store.ledger_entries()[-1].subject["mode"] == "external_url"
