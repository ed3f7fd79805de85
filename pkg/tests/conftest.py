from __future__ import annotations

import itertools
from datetime import datetime, timezone

import pytest

from chatbench.bots import BotGateway, BotTurnRequest, ScriptedBot
from chatbench.config import parse_task_config
from chatbench.rooms import RoomEngine
from chatbench.storage import SqliteStore
from chatbench.model import UserRecord
from chatbench.topics import load_topics

FIXED_TIME = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)


def fixed_clock():
    return FIXED_TIME


class TickingClock:
    """Advances one second per call; for ordering-sensitive tests."""

    def __init__(self, start: datetime = FIXED_TIME):
        self._start = start
        self._ticks = itertools.count()

    def __call__(self) -> datetime:
        from datetime import timedelta

        return self._start + timedelta(seconds=next(self._ticks))


def sequential_ids(prefix: str = "th"):
    counter = itertools.count(1)

    def factory() -> str:
        return f"{prefix}-{next(counter):04d}"

    return factory


BASE_CONFIG = """
task_name: moderation-eval
chat:
  human_turns_required: {turns}
  humans_per_thread: {humans}
  bots_per_thread: {bots}
  policy_name: {policy}
  allow_chat_after_done: {allow_after}
survey:
  questions:
    - id: coherence
      prompt: How coherent were the responses?
      kind: likert
      scale: ["1 - Not at all", "2 - Slightly", "3 - Somewhat", "4 - Mostly", "5 - Fully"]
    - id: feedback
      prompt: Any other feedback?
      kind: freeform
      required: false
limits:
  max_threads_per_worker: {max_per_worker}
bots:
  - name: guide
    base_url: http://bots.internal:9000/guide
instance:
  tcp_port: 8080
"""


def config_text(turns=3, humans=1, bots=1, policy="alternating",
                allow_after=False, max_per_worker="unlimited") -> str:
    return BASE_CONFIG.format(turns=turns, humans=humans, bots=bots, policy=policy,
                              allow_after=str(allow_after).lower(), max_per_worker=max_per_worker)


TOPICS_SEEDED = """
[
  {
    "id": "heated-thread",
    "name": "Heated policy debate",
    "seed_turns": [
      {"speaker": "user123", "text": "This policy is complete garbage and everyone knows it."},
      {"speaker": "user456", "text": "Calling it garbage without reading it is exactly the problem."}
    ],
    "data": {"subreddit": "policydebate"}
  }
]
"""

TOPICS_DUMMY = "{}"


class RecordingBot:
    """Wraps a bot callable and keeps every request it received."""

    def __init__(self, inner):
        self.inner = inner
        self.requests: list[BotTurnRequest] = []

    def __call__(self, request: BotTurnRequest) -> str:
        self.requests.append(request)
        return self.inner(request)


def make_stack(*, config=None, topics_text=TOPICS_SEEDED, script=("r1", "r2", "r3"),
               clock=None, store=None, bot=None):
    """Engine + store + gateway wired with an in-process scripted bot."""
    cfg = parse_task_config(config or config_text())
    topic_set = load_topics(topics_text)
    gateway = BotGateway(sleeper=lambda s: None)
    recorder = RecordingBot(bot or ScriptedBot(list(script)))
    gateway.register_local("guide", recorder)
    store = store or SqliteStore(":memory:")
    engine = RoomEngine(config=cfg, topics=topic_set, gateway=gateway, store=store,
                        clock=clock or fixed_clock, id_factory=sequential_ids())
    return engine, store, gateway, recorder


def add_worker(store: SqliteStore, user_id: str, consented=True) -> UserRecord:
    user = UserRecord(id=user_id, role="worker",
                      agreement_accepted_at=FIXED_TIME if consented else None)
    store.create_user(user)
    return user


@pytest.fixture
def seeded_stack():
    return make_stack()


@pytest.fixture
def agreement_file(tmp_path):
    path = tmp_path / "consent.html"
    path.write_text("<html><body><h1>Study agreement</h1></body></html>", encoding="utf-8")
    return path
