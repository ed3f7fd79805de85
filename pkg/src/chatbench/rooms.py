"""The dialogue manager: thread lifecycle, turn-taking, survey gating, ratings.

All mutations to one thread are serialized behind a per-thread lock; distinct
threads mutate concurrently. Bot gateway calls happen outside the critical
section and the resulting append re-enters it. Durable state lives in the
store; the engine keeps only runtime coordination state (locks, long-poll
version counters, last bot error) in memory, so it can be rebuilt from the
store after a restart.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Callable, Mapping

from .bots import BotGateway, BotTurnRequest, TranscriptEntry
from .config import TaskConfig, effective_answers, validate_answers
from .errors import (
    AlreadyParticipant,
    AlreadySubmitted,
    BotError,
    BotUnavailable,
    EmptyMessage,
    LimitExceeded,
    NotConsented,
    NotParticipant,
    ThreadDeleted,
    ThreadFull,
    ThreadNotFound,
    TurnViolation,
    UnknownWorker,
    ValidationFailed,
    WrongState,
)
from .model import (
    ChatMessage,
    ChatThread,
    Participant,
    RatingRecord,
    ThreadState,
    UpdateDelta,
    check_transition,
    utcnow,
)
from .policies import get_policy
from .storage import SqliteStore
from .topics import Topic, TopicSet


@dataclass(frozen=True)
class JoinOutcome:
    thread_id: str
    seat_order: int  # 1-based position among the humans
    state: ThreadState
    your_turn: bool


@dataclass(frozen=True)
class PostOutcome:
    message: ChatMessage
    state: ThreadState
    bot_reply_pending: bool


class _ThreadControl:
    """Runtime coordination for one thread."""

    __slots__ = ("lock", "condition", "version", "error_banner", "bot_running")

    def __init__(self) -> None:
        self.lock = threading.RLock()
        self.condition = threading.Condition(self.lock)
        self.version = 0
        self.error_banner: str | None = None
        self.bot_running = False


def _default_id_factory() -> str:
    return uuid.uuid4().hex[:12]


class RoomEngine:
    def __init__(self, *, config: TaskConfig, topics: TopicSet, gateway: BotGateway,
                 store: SqliteStore,
                 clock: Callable[[], datetime] = utcnow,
                 id_factory: Callable[[], str] = _default_id_factory):
        self.config = config
        self.topics = topics
        self.gateway = gateway
        self.store = store
        self.clock = clock
        self.id_factory = id_factory
        self._policy = get_policy(config.chat.policy_name)
        self._controls: dict[str, _ThreadControl] = {}
        self._controls_lock = threading.Lock()

    # ------------------------------------------------------------- plumbing

    def _control(self, thread_id: str) -> _ThreadControl:
        with self._controls_lock:
            control = self._controls.get(thread_id)
            if control is None:
                control = self._controls[thread_id] = _ThreadControl()
            return control

    def _bump(self, control: _ThreadControl) -> None:
        # Caller holds control.lock.
        control.version += 1
        control.condition.notify_all()

    def _load(self, thread_id: str) -> ChatThread:
        thread = self.store.get_thread(thread_id)
        if thread is None:
            raise ThreadNotFound(f"no thread with id {thread_id!r}")
        return thread

    def _slot_owner(self, thread: ChatThread) -> Participant | None:
        """Participant owning the current turn slot, cycling past the episode."""
        humans, bots = thread.humans(), thread.bots()
        if not humans:
            return None
        slot = self._policy.slot_at(len(humans), len(bots), thread.non_seed_count())
        group = humans if slot.role == "human" else bots
        if slot.index >= len(group):
            return None
        return group[slot.index]

    def _episode_done_at(self, thread: ChatThread, position: int) -> bool:
        return self._policy.episode_done(
            len(thread.humans()), len(thread.bots()),
            self.config.chat.human_turns_required, position)

    def version(self, thread_id: str) -> int:
        control = self._control(thread_id)
        with control.lock:
            return control.version

    def wait_for_change(self, thread_id: str, seen_version: int, timeout: float) -> int:
        """Block until the thread mutates past ``seen_version`` or the window
        elapses; returns the current version either way."""
        control = self._control(thread_id)
        with control.condition:
            control.condition.wait_for(lambda: control.version != seen_version, timeout=timeout)
            return control.version

    def thread_view(self, thread_id: str) -> ChatThread:
        return self._load(thread_id)

    # ------------------------------------------------------------ operations

    def create_thread(self, topic: Topic | str, bot_params: Mapping[str, Any] | None = None,
                      max_threads_per_worker: int | None = None) -> ChatThread:
        """New thread from a topic: seeds copied in order, bots attached,
        waiting for its human quorum."""
        if isinstance(topic, str):
            topic = self.topics.get(topic)
        bot_count = self.config.chat.bots_per_thread
        chosen = self.config.bots[:bot_count]
        for spec in chosen:
            if not self.gateway.is_registered(spec.name):
                raise BotUnavailable(f"bot endpoint {spec.name!r} is not registered")

        now = self.clock()
        thread = ChatThread(
            id=self.id_factory(),
            topic_id=topic.id,
            state=ThreadState.CREATED,
            config_ref=self.config.identity,
            bot_params=dict(bot_params or {}),
            created_at=now,
            max_threads_per_worker=max_threads_per_worker,
        )
        for i, spec in enumerate(chosen):
            thread.participants.append(Participant(user_id=spec.name, role="bot", join_order=i + 1))
        for i, seed in enumerate(topic.seed_turns):
            thread.messages.append(ChatMessage(
                seq=i + 1, author_id=seed.speaker_label, author_role="seed",
                speaker_label=seed.speaker_label, text=seed.text, is_seed=True,
                created_at=self.clock()))
        check_transition(thread.state, ThreadState.WAITING_FOR_HUMANS)
        thread.state = ThreadState.WAITING_FOR_HUMANS
        self.store.create_thread(thread)
        self._control(thread.id)
        return thread

    def join_thread(self, thread_id: str, user_id: str) -> JoinOutcome:
        user = self.store.get_user(user_id)
        if user is None:
            raise UnknownWorker(f"no user with id {user_id!r}")
        if self.config.onboarding is not None and user.agreement_accepted_at is None:
            raise NotConsented("user has not completed onboarding")

        control = self._control(thread_id)
        with control.lock:
            thread = self._load(thread_id)
            if thread.state in (ThreadState.COMPLETED, ThreadState.DELETED):
                raise WrongState(f"cannot join a thread in state {thread.state.value}")
            if thread.participant(user_id) is not None:
                raise AlreadyParticipant(f"user {user_id!r} already joined thread {thread_id!r}")
            humans = thread.humans()
            if thread.state is not ThreadState.WAITING_FOR_HUMANS \
                    or len(humans) >= self.config.chat.humans_per_thread:
                raise ThreadFull(f"thread {thread_id!r} already has its full human quorum")

            cap = thread.max_threads_per_worker
            if cap is None:
                cap = self.config.limits.max_threads_per_worker
            if cap is not None and self.store.count_completed(user_id) >= cap:
                raise LimitExceeded(
                    f"worker {user_id!r} already completed {cap} thread(s), the allowed maximum")

            participant = Participant(user_id=user_id, role="human",
                                      join_order=len(thread.participants) + 1)
            new_state: ThreadState | None = None
            episode_done: bool | None = None
            if len(humans) + 1 == self.config.chat.humans_per_thread:
                if self.config.chat.human_turns_required > 0:
                    new_state = ThreadState.ACTIVE
                else:
                    # Static / third-person mode: survey opens immediately.
                    new_state = ThreadState.RATING_OPEN
                    episode_done = True
                check_transition(thread.state, new_state)
            self.store.add_participant(thread_id, participant,
                                       new_state=new_state, episode_done=episode_done)
            self._bump(control)

            thread = self._load(thread_id)
            owner = self._slot_owner(thread)
            your_turn = (thread.state is ThreadState.ACTIVE
                         and owner is not None and owner.user_id == user_id)
            seat = sum(1 for p in thread.humans() if p.join_order <= participant.join_order)
            return JoinOutcome(thread_id=thread_id, seat_order=seat,
                               state=thread.state, your_turn=your_turn)

    def post_human_message(self, thread_id: str, user_id: str, text: str) -> PostOutcome:
        control = self._control(thread_id)
        with control.lock:
            thread = self._load(thread_id)
            participant = thread.participant(user_id)
            if participant is None or participant.role != "human":
                raise NotParticipant(f"user {user_id!r} is not a human participant")
            chat_open = thread.state is ThreadState.ACTIVE or (
                thread.state is ThreadState.RATING_OPEN and self.config.chat.allow_chat_after_done)
            if not chat_open:
                raise WrongState(f"cannot chat in state {thread.state.value}")
            cleaned = text.strip()
            if not cleaned:
                raise EmptyMessage("message text is empty")
            owner = self._slot_owner(thread)
            if owner is None or owner.user_id != user_id:
                raise TurnViolation(f"it is not {user_id!r}'s turn")

            position_after = thread.non_seed_count() + 1
            done_now = self._episode_done_at(thread, position_after)
            new_state: ThreadState | None = None
            episode_done: bool | None = None
            if done_now and thread.state is ThreadState.ACTIVE:
                # No bot reply outstanding (e.g. human-human threads): close here.
                check_transition(thread.state, ThreadState.RATING_OPEN)
                new_state = ThreadState.RATING_OPEN
                episode_done = True

            message = ChatMessage(
                seq=len(thread.messages) + 1, author_id=user_id, author_role="human",
                speaker_label=self._human_label(thread, participant), text=cleaned,
                is_seed=False, created_at=self.clock())
            self.store.append_message(thread_id, message, bump_turns_user=user_id,
                                      new_state=new_state, episode_done=episode_done)
            self._bump(control)

            humans = len(thread.humans())
            bots = len(thread.bots())
            bot_pending = False
            if bots:
                slot = self._policy.slot_at(humans, bots, position_after)
                bot_pending = slot.role == "bot"
            return PostOutcome(message=message,
                               state=new_state or thread.state,
                               bot_reply_pending=bot_pending)

    @staticmethod
    def _human_label(thread: ChatThread, participant: Participant) -> str:
        # Stable pseudonymous display label: rank among humans by join order.
        rank = sum(1 for p in thread.humans() if p.join_order <= participant.join_order)
        return f"human-{rank}"

    def run_bot_turns(self, thread_id: str) -> list[ChatMessage]:
        """Drive every bot turn the policy currently calls for.

        Stops when the policy yields a human slot or the episode completes.
        On gateway failure the thread stays chattable, the error surfaces on
        the updates feed, and the turn stays pending for retry.
        """
        control = self._control(thread_id)
        with control.lock:
            if control.bot_running:
                return []
            control.bot_running = True
        appended: list[ChatMessage] = []
        try:
            while True:
                with control.lock:
                    request, bot_name = self._plan_bot_request(thread_id)
                if request is None:
                    break
                try:
                    response = self.gateway.request_turn(bot_name, request)
                except BotError as err:
                    with control.lock:
                        control.error_banner = f"bot {bot_name!r} is unavailable: {err.message}"
                        self._bump(control)
                    raise
                with control.lock:
                    message = self._append_bot_message(thread_id, bot_name, response.text)
                    control.error_banner = None
                    self._bump(control)
                if message is None:
                    break
                appended.append(message)
        finally:
            with control.lock:
                control.bot_running = False
        return appended

    def _plan_bot_request(self, thread_id: str):
        """Under the thread lock: the pending bot turn, or (None, None)."""
        thread = self._load(thread_id)
        chat_open = thread.state is ThreadState.ACTIVE or (
            thread.state is ThreadState.RATING_OPEN and self.config.chat.allow_chat_after_done)
        if not chat_open:
            return None, None
        owner = self._slot_owner(thread)
        if owner is None or owner.role != "bot":
            return None, None
        if thread.state is ThreadState.ACTIVE and self._episode_done_at(thread, thread.non_seed_count()):
            return None, None
        try:
            topic_data: Mapping[str, Any] = self.topics.get(thread.topic_id).data
        except Exception:
            topic_data = {}
        request = BotTurnRequest(
            thread_id=thread.id,
            transcript=tuple(TranscriptEntry(
                author_role=m.author_role, speaker_label=m.speaker_label,
                text=m.text, is_seed=m.is_seed) for m in thread.messages),
            topic_data=topic_data,
            params=thread.bot_params,
        )
        return request, owner.user_id

    def _append_bot_message(self, thread_id: str, bot_name: str, text: str) -> ChatMessage | None:
        """Under the thread lock: land a bot reply, closing the episode when
        it is the final message."""
        thread = self._load(thread_id)
        chat_open = thread.state is ThreadState.ACTIVE or (
            thread.state is ThreadState.RATING_OPEN and self.config.chat.allow_chat_after_done)
        if not chat_open:
            return None
        position_after = thread.non_seed_count() + 1
        done_now = self._episode_done_at(thread, position_after)
        new_state: ThreadState | None = None
        episode_done: bool | None = None
        if done_now and thread.state is ThreadState.ACTIVE:
            check_transition(thread.state, ThreadState.RATING_OPEN)
            new_state = ThreadState.RATING_OPEN
            episode_done = True
        message = ChatMessage(
            seq=len(thread.messages) + 1, author_id=bot_name, author_role="bot",
            speaker_label=bot_name, text=text, is_seed=False, created_at=self.clock())
        self.store.append_message(thread_id, message, new_state=new_state,
                                  episode_done=episode_done)
        return message

    def submit_ratings(self, thread_id: str, user_id: str, answers: Mapping[str, Any]) -> ThreadState:
        control = self._control(thread_id)
        with control.lock:
            thread = self._load(thread_id)
            if thread.state is not ThreadState.RATING_OPEN:
                raise WrongState(f"survey is not open in state {thread.state.value}")
            participant = thread.participant(user_id)
            if participant is None or participant.role != "human":
                raise NotParticipant(f"user {user_id!r} is not a human participant")
            if participant.ratings_submitted:
                raise AlreadySubmitted(f"user {user_id!r} already submitted ratings")

            report = validate_answers(self.config.survey, answers)
            if not report.ok:
                raise ValidationFailed("survey answers failed validation", report)
            cleaned = effective_answers(self.config.survey, answers)

            now = self.clock()
            records = [RatingRecord(thread_id=thread_id, user_id=user_id,
                                    question_id=q.id, answer=cleaned[q.id], submitted_at=now)
                       for q in self.config.survey.questions if q.id in cleaned]
            others_done = all(p.ratings_submitted for p in thread.humans()
                              if p.user_id != user_id)
            new_state = ThreadState.COMPLETED if others_done else None
            if new_state is not None:
                check_transition(thread.state, new_state)
            self.store.add_ratings(thread_id, user_id, records,
                                   new_state=new_state, submit_assignment=True)
            self._bump(control)
            return new_state or thread.state

    def remaining_turns(self, thread_id: str, user_id: str) -> int:
        thread = self._load(thread_id)
        participant = thread.participant(user_id)
        if participant is None or participant.role != "human":
            raise NotParticipant(f"user {user_id!r} is not a human participant")
        return max(0, self.config.chat.human_turns_required - participant.human_turns_taken)

    def delete_thread(self, thread_id: str) -> None:
        """Admin-only soft delete; legal from any live state."""
        control = self._control(thread_id)
        with control.lock:
            thread = self._load(thread_id)
            if thread.state is ThreadState.DELETED:
                raise WrongState("thread is already deleted")
            check_transition(thread.state, ThreadState.DELETED)
            self.store.set_thread_state(thread_id, ThreadState.DELETED)
            self._bump(control)

    def delta(self, thread_id: str, since: int, for_user: str | None = None) -> UpdateDelta:
        """Read-only snapshot for the updates feed: messages past ``since``
        plus the current flags. Always consistent because reads take the
        thread lock briefly."""
        control = self._control(thread_id)
        with control.lock:
            thread = self._load(thread_id)
            if thread.state is ThreadState.DELETED:
                raise ThreadDeleted(f"thread {thread_id!r} is deleted")
            messages = tuple(m for m in thread.messages if m.seq > since)
            participant = thread.participant(for_user) if for_user else None
            remaining = 0
            your_turn = False
            if participant is not None and participant.role == "human":
                remaining = max(0, self.config.chat.human_turns_required
                                - participant.human_turns_taken)
                chat_open = thread.state is ThreadState.ACTIVE or (
                    thread.state is ThreadState.RATING_OPEN
                    and self.config.chat.allow_chat_after_done)
                if chat_open:
                    owner = self._slot_owner(thread)
                    your_turn = owner is not None and owner.user_id == for_user
            return UpdateDelta(
                messages=messages,
                state=thread.state,
                remaining_turns=remaining,
                survey_open=thread.state is ThreadState.RATING_OPEN,
                your_turn=your_turn,
                error_banner=control.error_banner,
            )
