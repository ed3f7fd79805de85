from __future__ import annotations

import pytest

from chatbench.errors import ConfigSyntaxError, SchemaError, TopicNotFound
from chatbench.topics import load_topics, serialize_topics

from conftest import TOPICS_SEEDED


def test_dummy_file_yields_one_open_topic():
    topic_set = load_topics("{}")
    assert len(topic_set) == 1
    topic = topic_set.topics[0]
    assert topic.seed_turns == ()
    assert topic.data == {}


def test_single_empty_object_in_array():
    topic_set = load_topics("[{}]")
    assert len(topic_set) == 1
    assert topic_set.topics[0].id == "topic-1"
    assert topic_set.topics[0].seed_turns == ()


def test_seed_turn_order_and_speakers_preserved():
    topic_set = load_topics(TOPICS_SEEDED)
    topic = topic_set.get("heated-thread")
    assert [s.speaker_label for s in topic.seed_turns] == ["user123", "user456"]
    assert topic.seed_turns[0].text.startswith("This policy")
    assert topic.data == {"subreddit": "policydebate"}


def test_map_form_uses_keys_as_ids():
    topic_set = load_topics('{"t1": {"name": "First"}, "t2": {}}')
    assert [t.id for t in topic_set] == ["t1", "t2"]
    assert topic_set.get("t1").name == "First"


def test_map_form_rejects_conflicting_inline_id():
    with pytest.raises(SchemaError):
        load_topics('{"t1": {"id": "other"}}')


def test_duplicate_ids_reported_and_nothing_loads():
    with pytest.raises(SchemaError) as exc:
        load_topics('[{"id": "t1"}, {"id": "t1"}]')
    assert "t1" in str(exc.value)


def test_malformed_json_reports_position():
    with pytest.raises(ConfigSyntaxError) as exc:
        load_topics("[{]")
    assert exc.value.line == 1


def test_empty_seed_text_rejected():
    with pytest.raises(SchemaError):
        load_topics('[{"id": "t", "seed_turns": [{"speaker": "a", "text": ""}]}]')


def test_get_existing_and_missing():
    topic_set = load_topics(TOPICS_SEEDED)
    assert topic_set.get("heated-thread").name == "Heated policy debate"
    with pytest.raises(TopicNotFound):
        topic_set.get("absent")


def test_lookup_is_case_sensitive():
    topic_set = load_topics('[{"id": "t1"}]')
    with pytest.raises(TopicNotFound):
        topic_set.get("T1")


def test_load_serialize_load_roundtrip():
    first = load_topics(TOPICS_SEEDED)
    second = load_topics(serialize_topics(first))
    assert first.topics == second.topics
    assert serialize_topics(first) == serialize_topics(second)
