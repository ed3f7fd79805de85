"""Domain records shared by the room engine, storage, and the HTTP surface."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from typing import Any, Mapping

from .errors import IllegalTransition


class ThreadState(str, enum.Enum):
    CREATED = "Created"
    WAITING_FOR_HUMANS = "WaitingForHumans"
    ACTIVE = "Active"
    RATING_OPEN = "RatingOpen"
    COMPLETED = "Completed"
    DELETED = "Deleted"


# Admin deletion is legal from every live state, completed threads included;
# exports survive as audit history until a purge.
LEGAL_TRANSITIONS: dict[ThreadState, frozenset[ThreadState]] = {
    ThreadState.CREATED: frozenset({ThreadState.WAITING_FOR_HUMANS, ThreadState.DELETED}),
    ThreadState.WAITING_FOR_HUMANS: frozenset({ThreadState.ACTIVE, ThreadState.RATING_OPEN, ThreadState.DELETED}),
    ThreadState.ACTIVE: frozenset({ThreadState.RATING_OPEN, ThreadState.DELETED}),
    ThreadState.RATING_OPEN: frozenset({ThreadState.COMPLETED, ThreadState.DELETED}),
    ThreadState.COMPLETED: frozenset({ThreadState.DELETED}),
    ThreadState.DELETED: frozenset(),
}


def check_transition(current: ThreadState, target: ThreadState) -> None:
    if target not in LEGAL_TRANSITIONS[current]:
        raise IllegalTransition(f"illegal thread state transition {current.value} -> {target.value}")


def format_timestamp(moment: datetime) -> str:
    """RFC 3339 UTC, e.g. 2024-05-01T12:00:00Z."""
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class ChatMessage:
    seq: int
    author_id: str
    author_role: str  # "human" | "bot" | "seed"
    speaker_label: str
    text: str
    is_seed: bool
    created_at: datetime

    def to_wire(self) -> dict:
        return {
            "seq": self.seq,
            "author_role": self.author_role,
            "speaker_label": self.speaker_label,
            "text": self.text,
            "is_seed": self.is_seed,
            "created_at": format_timestamp(self.created_at),
        }


@dataclass
class Participant:
    user_id: str
    role: str  # "human" | "bot"
    join_order: int
    human_turns_taken: int = 0
    ratings_submitted: bool = False


@dataclass
class ChatThread:
    id: str
    topic_id: str
    state: ThreadState
    config_ref: str
    bot_params: Mapping[str, Any] = field(default_factory=dict)
    participants: list[Participant] = field(default_factory=list)
    messages: list[ChatMessage] = field(default_factory=list)
    episode_done: bool = False
    created_at: datetime = field(default_factory=utcnow)
    max_threads_per_worker: int | None = None  # per-launch override, None = config default

    def humans(self) -> list[Participant]:
        return [p for p in self.participants if p.role == "human"]

    def bots(self) -> list[Participant]:
        return [p for p in self.participants if p.role == "bot"]

    def participant(self, user_id: str) -> Participant | None:
        for p in self.participants:
            if p.user_id == user_id:
                return p
        return None

    def non_seed_count(self) -> int:
        return sum(1 for m in self.messages if not m.is_seed)


@dataclass
class UserRecord:
    id: str
    role: str = "worker"  # "worker" | "admin"
    secret_hash: str | None = None
    ext_worker_id: str | None = None
    agreement_accepted_at: datetime | None = None
    qualifications: frozenset[str] = frozenset()


@dataclass(frozen=True)
class RatingRecord:
    thread_id: str
    user_id: str
    question_id: str
    answer: Any
    submitted_at: datetime


@dataclass
class AssignmentRecord:
    thread_id: str
    user_id: str
    ext_assignment_id: str | None = None
    ext_hit_id: str | None = None
    status: str = "open"  # "open" | "submitted" | "approved"


@dataclass
class Session:
    session_id: str
    user_id: str
    role: str
    created_at: datetime
    consent_ok: bool = False


@dataclass(frozen=True)
class LedgerEntry:
    seq: int
    action: str
    subject: Mapping[str, Any]
    amount: Decimal | None
    idempotency_key: str | None
    at: datetime

    def to_wire(self) -> dict:
        out: dict[str, Any] = {"seq": self.seq, "action": self.action, "subject": dict(self.subject)}
        if self.amount is not None:
            out["amount"] = str(self.amount)
        if self.idempotency_key is not None:
            out["idempotency_key"] = self.idempotency_key
        out["at"] = format_timestamp(self.at)
        return out


@dataclass(frozen=True)
class CrowdTask:
    """One published external task (a HIT, in crowd-platform terms)."""

    hit_id: str
    topic_id: str
    thread_id: str | None
    entry_url: str
    status: str = "open"  # "open" | "expired"


@dataclass(frozen=True)
class UpdateDelta:
    messages: tuple[ChatMessage, ...]
    state: ThreadState
    remaining_turns: int
    survey_open: bool
    your_turn: bool
    error_banner: str | None = None

    def to_wire(self) -> dict:
        return {
            "messages": [m.to_wire() for m in self.messages],
            "state": self.state.value,
            "remaining_turns": self.remaining_turns,
            "survey_open": self.survey_open,
            "your_turn": self.your_turn,
            "error_banner": self.error_banner,
        }


@dataclass(frozen=True)
class ThreadSummary:
    id: str
    topic_id: str
    state: ThreadState
    participant_count: int
    message_count: int
    created_at: datetime

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "topic_id": self.topic_id,
            "state": self.state.value,
            "participant_count": self.participant_count,
            "message_count": self.message_count,
            "created_at": format_timestamp(self.created_at),
        }
