"""Durable relational storage: users, threads, messages, ratings, assignments,
crowd ledger, sessions, and the canonical JSON export.

One SQLite file per platform instance. A single connection guarded by a lock
serializes writes; that matches the room engine's single-writer-per-thread
rule and keeps cross-thread interleavings safe.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .errors import LedgerAppendFailed, ThreadDeleted, ThreadNotFound
from .model import (
    AssignmentRecord,
    ChatMessage,
    ChatThread,
    CrowdTask,
    LedgerEntry,
    Participant,
    RatingRecord,
    Session,
    ThreadState,
    ThreadSummary,
    UserRecord,
    format_timestamp,
)

EXPORT_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS users (
    id TEXT PRIMARY KEY,
    role TEXT NOT NULL,
    secret_hash TEXT,
    ext_worker_id TEXT UNIQUE,
    agreement_accepted_at TEXT,
    qualifications TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS threads (
    id TEXT PRIMARY KEY,
    topic_id TEXT NOT NULL,
    state TEXT NOT NULL,
    config_ref TEXT NOT NULL,
    bot_params TEXT NOT NULL DEFAULT '{}',
    episode_done INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL,
    max_threads_per_worker INTEGER
);
CREATE TABLE IF NOT EXISTS participants (
    thread_id TEXT NOT NULL REFERENCES threads(id),
    user_id TEXT NOT NULL,
    role TEXT NOT NULL,
    join_order INTEGER NOT NULL,
    human_turns_taken INTEGER NOT NULL DEFAULT 0,
    ratings_submitted INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (thread_id, user_id),
    UNIQUE (thread_id, join_order)
);
CREATE TABLE IF NOT EXISTS messages (
    thread_id TEXT NOT NULL REFERENCES threads(id),
    seq INTEGER NOT NULL,
    author_id TEXT NOT NULL,
    author_role TEXT NOT NULL,
    speaker_label TEXT NOT NULL,
    text TEXT NOT NULL,
    is_seed INTEGER NOT NULL,
    created_at TEXT NOT NULL,
    PRIMARY KEY (thread_id, seq)
);
CREATE TABLE IF NOT EXISTS ratings (
    thread_id TEXT NOT NULL REFERENCES threads(id),
    user_id TEXT NOT NULL,
    question_id TEXT NOT NULL,
    answer TEXT NOT NULL,
    submitted_at TEXT NOT NULL,
    PRIMARY KEY (thread_id, user_id, question_id)
);
CREATE TABLE IF NOT EXISTS assignments (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    thread_id TEXT NOT NULL REFERENCES threads(id),
    user_id TEXT NOT NULL,
    ext_assignment_id TEXT,
    ext_hit_id TEXT,
    status TEXT NOT NULL DEFAULT 'open'
);
CREATE UNIQUE INDEX IF NOT EXISTS one_open_assignment
    ON assignments(thread_id, user_id) WHERE status = 'open';
CREATE TABLE IF NOT EXISTS crowd_tasks (
    hit_id TEXT PRIMARY KEY,
    topic_id TEXT NOT NULL,
    thread_id TEXT,
    entry_url TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'open'
);
CREATE TABLE IF NOT EXISTS ledger (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    action TEXT NOT NULL,
    subject TEXT NOT NULL,
    amount TEXT,
    idempotency_key TEXT UNIQUE,
    at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL REFERENCES users(id),
    role TEXT NOT NULL,
    created_at TEXT NOT NULL,
    consent_ok INTEGER NOT NULL DEFAULT 0
);
"""


def _dt_to_db(moment: datetime) -> str:
    return format_timestamp(moment)


def _dt_from_db(raw: str) -> datetime:
    return datetime.fromisoformat(raw.replace("Z", "+00:00")).astimezone(timezone.utc)


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class SqliteStore:
    """All persistence behind one object. Methods are individually atomic."""

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        if self.path != ":memory:":
            self._conn.execute("PRAGMA journal_mode = WAL")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def clone_in_memory(self) -> "SqliteStore":
        """Snapshot the full database into a fresh in-memory store."""
        replica = SqliteStore(":memory:")
        with self._lock:
            self._conn.backup(replica._conn)
        return replica

    # ------------------------------------------------------------------ users

    def create_user(self, user: UserRecord) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO users (id, role, secret_hash, ext_worker_id, agreement_accepted_at, qualifications)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (user.id, user.role, user.secret_hash, user.ext_worker_id,
                 _dt_to_db(user.agreement_accepted_at) if user.agreement_accepted_at else None,
                 json.dumps(sorted(user.qualifications))))

    def get_user(self, user_id: str) -> UserRecord | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM users WHERE id = ?", (user_id,)).fetchone()
        return self._user_from_row(row) if row else None

    def get_user_by_ext(self, ext_worker_id: str) -> UserRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM users WHERE ext_worker_id = ?", (ext_worker_id,)).fetchone()
        return self._user_from_row(row) if row else None

    @staticmethod
    def _user_from_row(row: sqlite3.Row) -> UserRecord:
        return UserRecord(
            id=row["id"],
            role=row["role"],
            secret_hash=row["secret_hash"],
            ext_worker_id=row["ext_worker_id"],
            agreement_accepted_at=_dt_from_db(row["agreement_accepted_at"]) if row["agreement_accepted_at"] else None,
            qualifications=frozenset(json.loads(row["qualifications"])),
        )

    def set_consent(self, user_id: str, at: datetime) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE users SET agreement_accepted_at = ? WHERE id = ?",
                               (_dt_to_db(at), user_id))

    def set_qualifications(self, user_id: str, qualifications: frozenset[str]) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE users SET qualifications = ? WHERE id = ?",
                               (json.dumps(sorted(qualifications)), user_id))

    # ---------------------------------------------------------------- threads

    def create_thread(self, thread: ChatThread) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO threads (id, topic_id, state, config_ref, bot_params, episode_done,"
                " created_at, max_threads_per_worker) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (thread.id, thread.topic_id, thread.state.value, thread.config_ref,
                 json.dumps(dict(thread.bot_params)), int(thread.episode_done),
                 _dt_to_db(thread.created_at), thread.max_threads_per_worker))
            for p in thread.participants:
                self._insert_participant(thread.id, p)
            for m in thread.messages:
                self._insert_message(thread.id, m)

    def _insert_participant(self, thread_id: str, p: Participant) -> None:
        self._conn.execute(
            "INSERT INTO participants (thread_id, user_id, role, join_order, human_turns_taken,"
            " ratings_submitted) VALUES (?, ?, ?, ?, ?, ?)",
            (thread_id, p.user_id, p.role, p.join_order, p.human_turns_taken, int(p.ratings_submitted)))

    def _insert_message(self, thread_id: str, m: ChatMessage) -> None:
        self._conn.execute(
            "INSERT INTO messages (thread_id, seq, author_id, author_role, speaker_label, text,"
            " is_seed, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
            (thread_id, m.seq, m.author_id, m.author_role, m.speaker_label, m.text,
             int(m.is_seed), _dt_to_db(m.created_at)))

    def get_thread(self, thread_id: str) -> ChatThread | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM threads WHERE id = ?", (thread_id,)).fetchone()
            if row is None:
                return None
            p_rows = self._conn.execute(
                "SELECT * FROM participants WHERE thread_id = ? ORDER BY join_order", (thread_id,)).fetchall()
            m_rows = self._conn.execute(
                "SELECT * FROM messages WHERE thread_id = ? ORDER BY seq", (thread_id,)).fetchall()
        return ChatThread(
            id=row["id"],
            topic_id=row["topic_id"],
            state=ThreadState(row["state"]),
            config_ref=row["config_ref"],
            bot_params=json.loads(row["bot_params"]),
            participants=[Participant(
                user_id=p["user_id"], role=p["role"], join_order=p["join_order"],
                human_turns_taken=p["human_turns_taken"],
                ratings_submitted=bool(p["ratings_submitted"])) for p in p_rows],
            messages=[ChatMessage(
                seq=m["seq"], author_id=m["author_id"], author_role=m["author_role"],
                speaker_label=m["speaker_label"], text=m["text"], is_seed=bool(m["is_seed"]),
                created_at=_dt_from_db(m["created_at"])) for m in m_rows],
            episode_done=bool(row["episode_done"]),
            created_at=_dt_from_db(row["created_at"]),
            max_threads_per_worker=row["max_threads_per_worker"],
        )

    def add_participant(self, thread_id: str, participant: Participant, *,
                        new_state: ThreadState | None = None,
                        episode_done: bool | None = None) -> None:
        """Participant insert plus any quorum-triggered state flip, one transaction."""
        with self._lock, self._conn:
            self._insert_participant(thread_id, participant)
            self._apply_thread_flags(thread_id, new_state, episode_done)

    def append_message(self, thread_id: str, message: ChatMessage, *,
                       bump_turns_user: str | None = None,
                       new_state: ThreadState | None = None,
                       episode_done: bool | None = None) -> None:
        """Message append plus its side effects, one transaction."""
        with self._lock, self._conn:
            self._insert_message(thread_id, message)
            if bump_turns_user is not None:
                self._conn.execute(
                    "UPDATE participants SET human_turns_taken = human_turns_taken + 1"
                    " WHERE thread_id = ? AND user_id = ?", (thread_id, bump_turns_user))
            self._apply_thread_flags(thread_id, new_state, episode_done)

    def _apply_thread_flags(self, thread_id: str, new_state: ThreadState | None,
                            episode_done: bool | None) -> None:
        if new_state is not None:
            self._conn.execute("UPDATE threads SET state = ? WHERE id = ?",
                               (new_state.value, thread_id))
        if episode_done is not None:
            self._conn.execute("UPDATE threads SET episode_done = ? WHERE id = ?",
                               (int(episode_done), thread_id))

    def set_thread_state(self, thread_id: str, state: ThreadState,
                         episode_done: bool | None = None) -> None:
        with self._lock, self._conn:
            self._apply_thread_flags(thread_id, state, episode_done)

    def add_ratings(self, thread_id: str, user_id: str, records: Iterable[RatingRecord], *,
                    new_state: ThreadState | None = None,
                    submit_assignment: bool = False,
                    _fault_hook: Callable[[], None] | None = None) -> None:
        """Persist one evaluator's full submission atomically.

        ``_fault_hook`` exists for crash-consistency tests: it runs between
        row inserts, inside the transaction, so a raised error must roll back
        every rating.
        """
        with self._lock, self._conn:
            first = True
            for record in records:
                if not first and _fault_hook is not None:
                    _fault_hook()
                first = False
                self._conn.execute(
                    "INSERT INTO ratings (thread_id, user_id, question_id, answer, submitted_at)"
                    " VALUES (?, ?, ?, ?, ?)",
                    (record.thread_id, record.user_id, record.question_id,
                     json.dumps(record.answer, ensure_ascii=False), _dt_to_db(record.submitted_at)))
            self._conn.execute(
                "UPDATE participants SET ratings_submitted = 1 WHERE thread_id = ? AND user_id = ?",
                (thread_id, user_id))
            if submit_assignment:
                self._conn.execute(
                    "UPDATE assignments SET status = 'submitted'"
                    " WHERE thread_id = ? AND user_id = ? AND status = 'open'",
                    (thread_id, user_id))
            self._apply_thread_flags(thread_id, new_state, None)

    def ratings_for_thread(self, thread_id: str) -> list[RatingRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM ratings WHERE thread_id = ? ORDER BY rowid", (thread_id,)).fetchall()
        return [RatingRecord(
            thread_id=r["thread_id"], user_id=r["user_id"], question_id=r["question_id"],
            answer=json.loads(r["answer"]), submitted_at=_dt_from_db(r["submitted_at"]))
            for r in rows]

    def count_completed(self, user_id: str) -> int:
        """Completed threads in which the user submitted ratings."""
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM participants p JOIN threads t ON t.id = p.thread_id"
                " WHERE p.user_id = ? AND p.ratings_submitted = 1 AND t.state = ?",
                (user_id, ThreadState.COMPLETED.value)).fetchone()
        return row["n"]

    def count_threads_for_topic(self, topic_id: str) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM threads WHERE topic_id = ? AND state != ?",
                (topic_id, ThreadState.DELETED.value)).fetchone()
        return row["n"]

    def list_threads(self, state: ThreadState | None = None, topic_id: str | None = None,
                     user_id: str | None = None) -> list[ThreadSummary]:
        query = [
            "SELECT t.id, t.topic_id, t.state, t.created_at,"
            " (SELECT COUNT(*) FROM participants p WHERE p.thread_id = t.id) AS participant_count,"
            " (SELECT COUNT(*) FROM messages m WHERE m.thread_id = t.id) AS message_count"
            " FROM threads t"
        ]
        clauses, args = [], []
        if state is not None:
            clauses.append("t.state = ?")
            args.append(state.value)
        if topic_id is not None:
            clauses.append("t.topic_id = ?")
            args.append(topic_id)
        if user_id is not None:
            clauses.append("EXISTS (SELECT 1 FROM participants p WHERE p.thread_id = t.id AND p.user_id = ?)")
            args.append(user_id)
        if clauses:
            query.append("WHERE " + " AND ".join(clauses))
        query.append("ORDER BY t.created_at DESC, t.rowid DESC")
        with self._lock:
            rows = self._conn.execute(" ".join(query), args).fetchall()
        return [ThreadSummary(
            id=r["id"], topic_id=r["topic_id"], state=ThreadState(r["state"]),
            participant_count=r["participant_count"], message_count=r["message_count"],
            created_at=_dt_from_db(r["created_at"])) for r in rows]

    def topic_stats(self) -> dict[str, dict]:
        """Per-topic thread counts and newest creation time (admin topics table)."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT topic_id, COUNT(*) AS n, MAX(created_at) AS latest FROM threads"
                " WHERE state != ? GROUP BY topic_id",
                (ThreadState.DELETED.value,)).fetchall()
        return {r["topic_id"]: {"threads_created": r["n"], "last_created_at": r["latest"]} for r in rows}

    # ----------------------------------------------------------------- export

    def export_thread(self, thread_id: str, include_deleted: bool = False) -> str:
        """The canonical JSON export document for one thread."""
        thread = self.get_thread(thread_id)
        if thread is None:
            raise ThreadNotFound(f"no thread with id {thread_id!r}")
        if thread.state is ThreadState.DELETED and not include_deleted:
            raise ThreadDeleted(f"thread {thread_id!r} is deleted")
        ratings = self.ratings_for_thread(thread_id)
        doc = {
            "export_version": EXPORT_VERSION,
            "thread": {
                "id": thread.id,
                "topic_id": thread.topic_id,
                "state": thread.state.value,
                "bot_params": dict(thread.bot_params),
            },
            "participants": [
                {
                    "user_id": p.user_id,
                    "role": p.role,
                    "join_order": p.join_order,
                    "human_turns_taken": p.human_turns_taken,
                    "ratings_submitted": p.ratings_submitted,
                }
                for p in thread.participants
            ],
            "messages": [m.to_wire() for m in thread.messages],
            "ratings": [
                {"user_id": r.user_id, "question_id": r.question_id, "answer": r.answer}
                for r in ratings
            ],
        }
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"

    def import_thread_document(self, document: str | Mapping[str, Any]) -> str:
        """Inverse of export (timestamps not present in the export are epoch).

        Exists for round-trip verification and data salvage.
        """
        doc = json.loads(document) if isinstance(document, str) else document
        t = doc["thread"]
        thread = ChatThread(
            id=t["id"], topic_id=t["topic_id"], state=ThreadState(t["state"]),
            config_ref="imported", bot_params=t.get("bot_params", {}),
            participants=[Participant(
                user_id=p["user_id"], role=p["role"], join_order=p["join_order"],
                human_turns_taken=p["human_turns_taken"],
                ratings_submitted=p["ratings_submitted"]) for p in doc.get("participants", [])],
            messages=[ChatMessage(
                seq=m["seq"], author_id=m["speaker_label"], author_role=m["author_role"],
                speaker_label=m["speaker_label"], text=m["text"], is_seed=m["is_seed"],
                created_at=_dt_from_db(m["created_at"])) for m in doc.get("messages", [])],
            created_at=_EPOCH,
        )
        self.create_thread(thread)
        records = [RatingRecord(
            thread_id=thread.id, user_id=r["user_id"], question_id=r["question_id"],
            answer=r["answer"], submitted_at=_EPOCH) for r in doc.get("ratings", [])]
        if records:
            by_user: dict[str, list[RatingRecord]] = {}
            for record in records:
                by_user.setdefault(record.user_id, []).append(record)
            for user_id, group in by_user.items():
                self.add_ratings(thread.id, user_id, group)
        return thread.id

    # -------------------------------------------------------------- assignments

    def create_assignment(self, assignment: AssignmentRecord) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO assignments (thread_id, user_id, ext_assignment_id, ext_hit_id, status)"
                " VALUES (?, ?, ?, ?, ?)",
                (assignment.thread_id, assignment.user_id, assignment.ext_assignment_id,
                 assignment.ext_hit_id, assignment.status))

    def get_assignment(self, ext_assignment_id: str) -> AssignmentRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM assignments WHERE ext_assignment_id = ?", (ext_assignment_id,)).fetchone()
        return self._assignment_from_row(row) if row else None

    def open_assignment(self, thread_id: str, user_id: str) -> AssignmentRecord | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM assignments WHERE thread_id = ? AND user_id = ? AND status = 'open'",
                (thread_id, user_id)).fetchone()
        return self._assignment_from_row(row) if row else None

    def assignments_for_user(self, user_id: str) -> list[AssignmentRecord]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM assignments WHERE user_id = ? ORDER BY id", (user_id,)).fetchall()
        return [self._assignment_from_row(r) for r in rows]

    @staticmethod
    def _assignment_from_row(row: sqlite3.Row) -> AssignmentRecord:
        return AssignmentRecord(
            thread_id=row["thread_id"], user_id=row["user_id"],
            ext_assignment_id=row["ext_assignment_id"], ext_hit_id=row["ext_hit_id"],
            status=row["status"])

    def set_assignment_status(self, ext_assignment_id: str, status: str) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE assignments SET status = ? WHERE ext_assignment_id = ?",
                               (status, ext_assignment_id))

    # -------------------------------------------------------------- crowd tasks

    def save_crowd_task(self, task: CrowdTask) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO crowd_tasks (hit_id, topic_id, thread_id, entry_url, status)"
                " VALUES (?, ?, ?, ?, ?)",
                (task.hit_id, task.topic_id, task.thread_id, task.entry_url, task.status))

    def get_crowd_task(self, hit_id: str) -> CrowdTask | None:
        with self._lock:
            row = self._conn.execute("SELECT * FROM crowd_tasks WHERE hit_id = ?", (hit_id,)).fetchone()
        if row is None:
            return None
        return CrowdTask(hit_id=row["hit_id"], topic_id=row["topic_id"], thread_id=row["thread_id"],
                         entry_url=row["entry_url"], status=row["status"])

    def crowd_task_for_thread(self, thread_id: str) -> CrowdTask | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM crowd_tasks WHERE thread_id = ? AND status = 'open'", (thread_id,)).fetchone()
        if row is None:
            return None
        return CrowdTask(hit_id=row["hit_id"], topic_id=row["topic_id"], thread_id=row["thread_id"],
                         entry_url=row["entry_url"], status=row["status"])

    def set_crowd_task_status(self, hit_id: str, status: str) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE crowd_tasks SET status = ? WHERE hit_id = ?", (status, hit_id))

    # ------------------------------------------------------------------ ledger

    def append_ledger(self, action: str, subject: Mapping[str, Any], *,
                      amount: Decimal | None = None,
                      idempotency_key: str | None = None,
                      at: datetime) -> LedgerEntry:
        try:
            with self._lock, self._conn:
                cursor = self._conn.execute(
                    "INSERT INTO ledger (action, subject, amount, idempotency_key, at)"
                    " VALUES (?, ?, ?, ?, ?)",
                    (action, json.dumps(dict(subject), ensure_ascii=False, sort_keys=True),
                     str(amount) if amount is not None else None, idempotency_key, _dt_to_db(at)))
                seq = cursor.lastrowid
        except sqlite3.Error as err:
            raise LedgerAppendFailed(f"ledger append failed: {err}") from err
        return LedgerEntry(seq=seq, action=action, subject=dict(subject), amount=amount,
                           idempotency_key=idempotency_key, at=at)

    def find_ledger_by_key(self, idempotency_key: str) -> LedgerEntry | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM ledger WHERE idempotency_key = ?", (idempotency_key,)).fetchone()
        return self._ledger_from_row(row) if row else None

    def ledger_entries(self) -> list[LedgerEntry]:
        with self._lock:
            rows = self._conn.execute("SELECT * FROM ledger ORDER BY seq").fetchall()
        return [self._ledger_from_row(r) for r in rows]

    @staticmethod
    def _ledger_from_row(row: sqlite3.Row) -> LedgerEntry:
        return LedgerEntry(
            seq=row["seq"], action=row["action"], subject=json.loads(row["subject"]),
            amount=Decimal(row["amount"]) if row["amount"] is not None else None,
            idempotency_key=row["idempotency_key"], at=_dt_from_db(row["at"]))

    # ---------------------------------------------------------------- sessions

    def create_session(self, session: Session) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO sessions (session_id, user_id, role, created_at, consent_ok)"
                " VALUES (?, ?, ?, ?, ?)",
                (session.session_id, session.user_id, session.role,
                 _dt_to_db(session.created_at), int(session.consent_ok)))

    def get_session(self, session_id: str) -> Session | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM sessions WHERE session_id = ?", (session_id,)).fetchone()
        if row is None:
            return None
        return Session(session_id=row["session_id"], user_id=row["user_id"], role=row["role"],
                       created_at=_dt_from_db(row["created_at"]), consent_ok=bool(row["consent_ok"]))

    def set_session_consent(self, session_id: str, consent_ok: bool) -> None:
        with self._lock, self._conn:
            self._conn.execute("UPDATE sessions SET consent_ok = ? WHERE session_id = ?",
                               (int(consent_ok), session_id))
