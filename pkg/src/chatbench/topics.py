"""Topics file: the predetermined contexts threads are launched from.

The file is UTF-8 JSON, either an array of topic objects or a map of
id -> topic object. A topic object looks like::

    {"id": "t1", "name": "Heated thread",
     "seed_turns": [{"speaker": "user123", "text": "..."}],
     "data": {"anything": "forwarded to bots"}}

Every field is optional. An entirely empty file (``{}``) is the dummy
open-domain case: one topic, no seeds, the human speaks first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping

from .errors import ConfigSyntaxError, SchemaError, TopicNotFound


@dataclass(frozen=True)
class SeedTurn:
    speaker_label: str
    text: str


@dataclass(frozen=True)
class Topic:
    id: str
    name: str
    seed_turns: tuple[SeedTurn, ...] = ()
    data: Mapping[str, Any] = field(default_factory=dict)


class TopicSet:
    """Ordered, immutable collection of topics; lookups are case-sensitive."""

    def __init__(self, topics: list[Topic]):
        self._topics = tuple(topics)
        self._by_id = {t.id: t for t in self._topics}

    def __iter__(self) -> Iterator[Topic]:
        return iter(self._topics)

    def __len__(self) -> int:
        return len(self._topics)

    @property
    def topics(self) -> tuple[Topic, ...]:
        return self._topics

    def get(self, topic_id: str) -> Topic:
        topic = self._by_id.get(topic_id)
        if topic is None:
            raise TopicNotFound(topic_id)
        return topic

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self._by_id


def _parse_seed_turn(raw: Any, path: str) -> SeedTurn:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{path} must be an object", path=path)
    unknown = sorted(set(raw) - {"speaker", "text"})
    if unknown:
        raise SchemaError(f"unknown key(s) {unknown} at {path}", path=path)
    speaker = raw.get("speaker")
    text = raw.get("text")
    if not isinstance(speaker, str) or not speaker:
        raise SchemaError(f"{path}.speaker must be a nonempty string", path=f"{path}.speaker")
    if not isinstance(text, str) or not text:
        raise SchemaError(f"{path}.text must be a nonempty string", path=f"{path}.text")
    return SeedTurn(speaker_label=speaker, text=text)


def _parse_topic(raw: Any, path: str, fallback_id: str) -> Topic:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{path} must be an object", path=path)
    unknown = sorted(set(raw) - {"id", "name", "seed_turns", "data"})
    if unknown:
        raise SchemaError(f"unknown key(s) {unknown} at {path}", path=path)

    topic_id = raw.get("id", fallback_id)
    if not isinstance(topic_id, str) or not topic_id:
        raise SchemaError(f"{path}.id must be a nonempty string", path=f"{path}.id")

    name = raw.get("name", topic_id)
    if not isinstance(name, str) or not name:
        raise SchemaError(f"{path}.name must be a nonempty string", path=f"{path}.name")

    raw_turns = raw.get("seed_turns", [])
    if not isinstance(raw_turns, list):
        raise SchemaError(f"{path}.seed_turns must be an array", path=f"{path}.seed_turns")
    seed_turns = tuple(
        _parse_seed_turn(t, f"{path}.seed_turns[{i}]") for i, t in enumerate(raw_turns)
    )

    data = raw.get("data", {})
    if not isinstance(data, Mapping):
        raise SchemaError(f"{path}.data must be an object", path=f"{path}.data")

    return Topic(id=topic_id, name=name, seed_turns=seed_turns, data=dict(data))


def load_topics(json_text: str) -> TopicSet:
    """Parse a topics file. Duplicate ids are all reported and nothing loads."""
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as err:
        raise ConfigSyntaxError(f"malformed JSON: {err.msg}", line=err.lineno, column=err.colno) from err

    topics: list[Topic] = []
    if isinstance(raw, Mapping):
        if not raw:
            # The dummy open-domain file: one topic, human speaks first.
            topics.append(Topic(id="topic-1", name="topic-1"))
        else:
            for key, value in raw.items():
                if not isinstance(key, str) or not key:
                    raise SchemaError("topic map keys must be nonempty strings", path=str(key))
                topic = _parse_topic(value, f"topics[{key!r}]", fallback_id=key)
                if topic.id != key:
                    raise SchemaError(
                        f"topics[{key!r}].id is {topic.id!r} but the map key is {key!r}",
                        path=f"topics[{key!r}].id")
                topics.append(topic)
    elif isinstance(raw, list):
        topics = [
            _parse_topic(entry, f"topics[{i}]", fallback_id=f"topic-{i + 1}")
            for i, entry in enumerate(raw)
        ]
    else:
        raise SchemaError("topics file must be a JSON array or object", path="")

    seen: dict[str, list[int]] = {}
    for i, topic in enumerate(topics):
        seen.setdefault(topic.id, []).append(i)
    duplicates = {tid: positions for tid, positions in seen.items() if len(positions) > 1}
    if duplicates:
        parts = ", ".join(f"{tid!r} at positions {positions}" for tid, positions in sorted(duplicates.items()))
        raise SchemaError(f"duplicate topic id(s): {parts}", path="id")

    return TopicSet(topics)


def serialize_topics(topic_set: TopicSet) -> str:
    """Normalized JSON array form; load . serialize . load is the identity."""
    doc = []
    for topic in topic_set:
        doc.append({
            "id": topic.id,
            "name": topic.name,
            "seed_turns": [{"speaker": s.speaker_label, "text": s.text} for s in topic.seed_turns],
            "data": dict(topic.data),
        })
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
