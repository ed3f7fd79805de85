"""Crowd-platform client: task publishing, qualifications, bonuses.

Every call that touches money or worker standing appends to the persistent
ledger before reporting success, so an audit can always replay the ledger
into the exact current mirror state. The mock platform implements the full
interface offline; a real platform adapter drops in behind the same class.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal
from typing import Any, Callable, Iterable, Mapping

from .errors import (
    ConfigError,
    NonPositiveAmount,
    PlatformRejected,
    UnknownAssignment,
    UnknownWorker,
    WrongState,
)
from .model import CrowdTask, LedgerEntry, utcnow
from .storage import SqliteStore

# Entry-link conventions of the dominant crowd platform; deployments may
# override the sentinel to match whatever fills their entry URLs.
WORKER_PARAM = "workerId"
ASSIGNMENT_PARAM = "assignmentId"
HIT_PARAM = "hitId"
PREVIEW_SENTINEL = "ASSIGNMENT_ID_NOT_AVAILABLE"


@dataclass(frozen=True)
class EntryParams:
    worker_id: str
    assignment_id: str | None
    hit_id: str | None
    preview: bool


def parse_entry(query: Mapping[str, str], *,
                preview_sentinel: str = PREVIEW_SENTINEL) -> EntryParams | None:
    """Decode crowd-platform entry parameters; None means an anonymous visit
    (the external-URL signup flow applies)."""
    worker = query.get(WORKER_PARAM)
    assignment = query.get(ASSIGNMENT_PARAM)
    hit = query.get(HIT_PARAM)
    if not worker and not assignment and not hit:
        return None
    preview = assignment == preview_sentinel
    return EntryParams(
        worker_id=worker or "",
        assignment_id=None if (not assignment or preview) else assignment,
        hit_id=hit or None,
        preview=preview,
    )


@dataclass(frozen=True)
class TaskHandle:
    hit_id: str
    thread_id: str | None
    entry_url: str


class CrowdClient:
    """Ledger-backed capability interface shared by all platform modes."""

    platform = "none"

    def __init__(self, store: SqliteStore, *,
                 clock: Callable[[], datetime] = utcnow,
                 id_factory: Callable[[], str] | None = None):
        self.store = store
        self.clock = clock
        self._id_factory = id_factory or (lambda: uuid.uuid4().hex[:10])
        self._lock = threading.Lock()

    # -- publishing ---------------------------------------------------------

    def publish_task(self, topic_id: str, count: int, *, entry_base: str,
                     thread_ids: Iterable[str | None] = ()) -> list[TaskHandle]:
        raise ConfigError("no crowd platform is configured; cannot publish tasks")

    def expire_task(self, hit_id: str) -> LedgerEntry:
        raise ConfigError("no crowd platform is configured; cannot expire tasks")

    # -- worker standing ------------------------------------------------------

    def assign_qualification(self, worker_id: str, qualification: str) -> LedgerEntry:
        user = self.store.get_user(worker_id)
        if user is None:
            raise UnknownWorker(f"no worker with id {worker_id!r}")
        entry = self.store.append_ledger(
            "assign_qualification", {"worker_id": worker_id, "qualification": qualification},
            at=self.clock())
        self.store.set_qualifications(worker_id, user.qualifications | {qualification})
        return entry

    def revoke_qualification(self, worker_id: str, qualification: str) -> LedgerEntry:
        user = self.store.get_user(worker_id)
        if user is None:
            raise UnknownWorker(f"no worker with id {worker_id!r}")
        entry = self.store.append_ledger(
            "revoke_qualification", {"worker_id": worker_id, "qualification": qualification},
            at=self.clock())
        self.store.set_qualifications(worker_id, user.qualifications - {qualification})
        return entry

    # -- money ------------------------------------------------------------------

    def grant_bonus(self, worker_id: str, assignment_id: str, amount: Decimal,
                    reason: str, idempotency_key: str) -> LedgerEntry:
        """Exactly-once per idempotency key: a repeat returns the original
        acknowledgment and appends nothing."""
        with self._lock:
            existing = self.store.find_ledger_by_key(idempotency_key)
            if existing is not None:
                return existing
            if amount <= 0:
                raise NonPositiveAmount(f"bonus amount must be positive, got {amount}")
            assignment = self.store.get_assignment(assignment_id)
            if assignment is None or assignment.status not in ("submitted", "approved"):
                raise UnknownAssignment(
                    f"no submitted/approved assignment with id {assignment_id!r}")
            if self.store.get_user(worker_id) is None:
                raise UnknownWorker(f"no worker with id {worker_id!r}")
            return self.store.append_ledger(
                "bonus",
                {"worker_id": worker_id, "assignment_id": assignment_id, "reason": reason},
                amount=amount, idempotency_key=idempotency_key, at=self.clock())

    def approve_assignment(self, assignment_id: str) -> LedgerEntry:
        assignment = self.store.get_assignment(assignment_id)
        if assignment is None:
            raise UnknownAssignment(f"no assignment with id {assignment_id!r}")
        if assignment.status != "submitted":
            raise WrongState(f"assignment {assignment_id!r} is {assignment.status}, not submitted")
        entry = self.store.append_ledger(
            "approve_assignment",
            {"worker_id": assignment.user_id, "assignment_id": assignment_id},
            at=self.clock())
        self.store.set_assignment_status(assignment_id, "approved")
        return entry


class NoPlatformClient(CrowdClient):
    """Internal-annotation mode: worker standing is still mirrored and
    audited locally, but there is no platform to publish tasks to."""

    platform = "none"


class ExternalUrlClient(CrowdClient):
    """Shared-link mode (survey tools, direct recruiting): publishing is a
    recorded no-op because evaluators arrive through the public URL."""

    platform = "external_url"

    def publish_task(self, topic_id: str, count: int, *, entry_base: str,
                     thread_ids: Iterable[str | None] = ()) -> list[TaskHandle]:
        self.store.append_ledger(
            "publish", {"topic_id": topic_id, "count": count, "mode": "external_url"},
            at=self.clock())
        return []

    def expire_task(self, hit_id: str) -> LedgerEntry:
        return self.store.append_ledger("expire", {"hit_id": hit_id, "mode": "external_url"},
                                        at=self.clock())


class MockMturkClient(CrowdClient):
    """Fully functional offline stand-in for the crowd platform.

    Behaves like the real thing from the platform's point of view: publishes
    produce task handles with entry URLs, expiries close them, and every
    action lands in the ledger. ``fail_publishes`` simulates platform-side
    rejections for tests.
    """

    platform = "mock_mturk"

    def __init__(self, store: SqliteStore, *,
                 clock: Callable[[], datetime] = utcnow,
                 id_factory: Callable[[], str] | None = None,
                 fail_publishes: bool = False):
        super().__init__(store, clock=clock, id_factory=id_factory)
        self.fail_publishes = fail_publishes

    def publish_task(self, topic_id: str, count: int, *, entry_base: str,
                     thread_ids: Iterable[str | None] = ()) -> list[TaskHandle]:
        if count < 1:
            raise ConfigError(f"publish count must be positive, got {count}")
        if self.fail_publishes:
            raise PlatformRejected("mock platform is configured to reject publishes")
        threads = list(thread_ids)
        handles: list[TaskHandle] = []
        for i in range(count):
            hit_id = f"hit-{self._id_factory()}"
            thread_id = threads[i] if i < len(threads) else None
            entry_url = f"{entry_base}/landing?{HIT_PARAM}={hit_id}"
            self.store.append_ledger(
                "publish", {"topic_id": topic_id, "hit_id": hit_id, "thread_id": thread_id},
                at=self.clock())
            self.store.save_crowd_task(CrowdTask(
                hit_id=hit_id, topic_id=topic_id, thread_id=thread_id,
                entry_url=entry_url, status="open"))
            handles.append(TaskHandle(hit_id=hit_id, thread_id=thread_id, entry_url=entry_url))
        return handles

    def expire_task(self, hit_id: str) -> LedgerEntry:
        task = self.store.get_crowd_task(hit_id)
        if task is None:
            raise UnknownAssignment(f"no published task with hit id {hit_id!r}")
        entry = self.store.append_ledger("expire", {"hit_id": hit_id}, at=self.clock())
        self.store.set_crowd_task_status(hit_id, "expired")
        return entry


def build_crowd_client(platform: str, store: SqliteStore, *,
                       clock: Callable[[], datetime] = utcnow,
                       id_factory: Callable[[], str] | None = None) -> CrowdClient:
    if platform == "mock_mturk":
        return MockMturkClient(store, clock=clock, id_factory=id_factory)
    if platform == "external_url":
        return ExternalUrlClient(store, clock=clock, id_factory=id_factory)
    return NoPlatformClient(store, clock=clock, id_factory=id_factory)


def export_ledger(store: SqliteStore) -> str:
    """The full ledger as a JSON document, for audits."""
    import json

    entries = [entry.to_wire() for entry in store.ledger_entries()]
    return json.dumps({"ledger_version": 1, "entries": entries},
                      ensure_ascii=False, indent=2) + "\n"


def replay_ledger(entries: Iterable[LedgerEntry]) -> dict[str, Any]:
    """Rebuild worker standing and bonus totals from the ledger alone.

    The result must match the live mirror exactly; that equivalence is the
    audit guarantee the ledger exists for.
    """
    qualifications: dict[str, set[str]] = {}
    bonus_totals: dict[str, Decimal] = {}
    bonus_keys: dict[str, LedgerEntry] = {}
    for entry in entries:
        if entry.action == "assign_qualification":
            worker = entry.subject["worker_id"]
            qualifications.setdefault(worker, set()).add(entry.subject["qualification"])
        elif entry.action == "revoke_qualification":
            worker = entry.subject["worker_id"]
            qualifications.setdefault(worker, set()).discard(entry.subject["qualification"])
        elif entry.action == "bonus":
            worker = entry.subject["worker_id"]
            assert entry.idempotency_key is not None
            assert entry.idempotency_key not in bonus_keys, "duplicate bonus key in ledger"
            bonus_keys[entry.idempotency_key] = entry
            bonus_totals[worker] = bonus_totals.get(worker, Decimal("0")) + (entry.amount or Decimal("0"))
    return {
        "qualifications": {w: frozenset(q) for w, q in qualifications.items()},
        "bonus_totals": bonus_totals,
        "bonus_keys": bonus_keys,
    }
