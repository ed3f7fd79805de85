from __future__ import annotations

import logging

import pytest
from hypothesis import given, strategies as st

from chatbench.bots import (
    BotEndpointSpec,
    BotGateway,
    BotTurnRequest,
    EchoBot,
    ScriptedBot,
    TranscriptEntry,
    scripted_bot,
)
from chatbench.errors import BotError, BotUnavailable, DuplicateName, EmptyScript, MalformedUrl


def request_with(*texts: str) -> BotTurnRequest:
    transcript = tuple(
        TranscriptEntry(author_role="human", speaker_label="human-1", text=t, is_seed=False)
        for t in texts)
    return BotTurnRequest(thread_id="t1", transcript=transcript)


def make_gateway() -> BotGateway:
    return BotGateway(sleeper=lambda s: None)


def test_echo_returns_last_transcript_text():
    gateway = make_gateway()
    gateway.register_local("echo", EchoBot())
    response = gateway.request_turn("echo", request_with("hello", "hi"))
    assert response.text == "hi"


def test_scripted_bot_plays_in_order_then_repeats():
    bot = scripted_bot(["a", "b"])
    assert [bot(request_with("x")) for _ in range(3)] == ["a", "b", "b"]


def test_empty_script_rejected():
    with pytest.raises(EmptyScript):
        scripted_bot([])


def test_duplicate_endpoint_name_rejected():
    gateway = make_gateway()
    gateway.register_endpoint(BotEndpointSpec(name="gpt-proxy", base_url="http://models:8000"))
    with pytest.raises(DuplicateName):
        gateway.register_endpoint(BotEndpointSpec(name="gpt-proxy", base_url="http://models:8001"))


def test_malformed_base_url_rejected():
    gateway = make_gateway()
    with pytest.raises(MalformedUrl):
        gateway.register_endpoint(BotEndpointSpec(name="bad", base_url="not a url"))


def test_unregistered_endpoint():
    with pytest.raises(BotUnavailable):
        make_gateway().request_turn("ghost", request_with("x"))


def test_empty_text_is_malformed_body():
    gateway = make_gateway()
    gateway.register_local("mute", lambda req: "   ", max_retries=0)
    with pytest.raises(BotError) as exc:
        gateway.request_turn("mute", request_with("x"))
    assert exc.value.kind == "malformed_body"


class FlakyTransport:
    """Fails the first ``failures`` attempts, then succeeds; counts attempts."""

    def __init__(self, failures: int, kind: str = "timeout"):
        self.failures = failures
        self.kind = kind
        self.attempts = 0

    def __call__(self, request, spec):
        from chatbench.bots import _AttemptFailure

        self.attempts += 1
        if self.attempts <= self.failures:
            raise _AttemptFailure(self.kind, f"induced failure #{self.attempts}")
        return {"text": "recovered", "meta": {}}


def test_two_failures_then_success_within_retry_budget(caplog):
    gateway = make_gateway()
    transport = FlakyTransport(failures=2)
    gateway.register_transport(BotEndpointSpec(name="flaky", base_url="http://f:1", max_retries=2), transport)
    with caplog.at_level(logging.WARNING, logger="chatbench.bots"):
        response = gateway.request_turn("flaky", request_with("x"))
    assert response.text == "recovered"
    assert transport.attempts == 3
    retry_logs = [r for r in caplog.records if "attempt" in r.getMessage()]
    assert len(retry_logs) == 2


def test_attempts_never_exceed_max_retries_plus_one():
    gateway = make_gateway()
    transport = FlakyTransport(failures=99, kind="bad_status")
    gateway.register_transport(BotEndpointSpec(name="dead", base_url="http://f:1", max_retries=2), transport)
    with pytest.raises(BotError) as exc:
        gateway.request_turn("dead", request_with("x"))
    assert transport.attempts == 3
    assert exc.value.attempts == 3
    assert exc.value.kind == "bad_status"


def test_backoff_is_exponential_with_full_jitter():
    sleeps: list[float] = []

    class TopOfRange:
        # Drives jitter to its upper bound so the schedule is observable.
        def uniform(self, low, high):
            return high

    gateway = BotGateway(sleeper=sleeps.append, rng=TopOfRange())
    transport = FlakyTransport(failures=99)
    gateway.register_transport(BotEndpointSpec(name="slow", base_url="http://f:1", max_retries=3), transport)
    with pytest.raises(BotError):
        gateway.request_turn("slow", request_with("x"))
    assert sleeps == [1.0, 2.0, 4.0]


def test_transcript_round_trips_through_the_wire_format():
    entries = (
        TranscriptEntry("seed", "user123", "seeded text", True),
        TranscriptEntry("human", "human-1", "typed text", False),
        TranscriptEntry("bot", "guide", "bot reply", False),
    )
    request = BotTurnRequest(thread_id="t9", transcript=entries,
                             topic_data={"k": "v"}, params={"persona": "socratic"})
    assert BotTurnRequest.from_wire(request.to_wire()) == request


def test_transcript_echo_bot_sees_exact_transcript():
    import json

    gateway = make_gateway()
    gateway.register_local("probe", lambda req: json.dumps([e.to_wire() for e in req.transcript]))
    request = request_with("one", "two")
    response = gateway.request_turn("probe", request)
    assert json.loads(response.text) == [e.to_wire() for e in request.transcript]


@given(defaults=st.dictionaries(st.text(min_size=1, max_size=8), st.text(max_size=8), max_size=5),
       thread=st.dictionaries(st.text(min_size=1, max_size=8), st.text(max_size=8), max_size=5))
def test_params_overlay_thread_wins(defaults, thread):
    gateway = make_gateway()
    seen = {}

    def capture(req):
        seen.update(req.params)
        return "ok"

    gateway.register_local("capture", capture, default_params=defaults)
    seen.clear()
    gateway.request_turn("capture", BotTurnRequest(thread_id="t", transcript=(), params=thread))
    expected = dict(defaults)
    expected.update(thread)
    assert seen == expected


def test_thread_bot_params_forwarded():
    gateway = make_gateway()
    captured = []
    gateway.register_local("capture", lambda req: captured.append(dict(req.params)) or "ok",
                           default_params={"persona": "default", "model": "m1"})
    gateway.request_turn("capture", BotTurnRequest(
        thread_id="t", transcript=(), params={"persona": "socratic"}))
    assert captured == [{"persona": "socratic", "model": "m1"}]
