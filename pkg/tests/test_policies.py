"""Turn-taking checked against hand-written speaker sequences.

The expected sequences below were written out by hand from the policy
definitions; they are the oracle the implementation must match.
"""

from __future__ import annotations

import pytest

from chatbench.errors import DuplicateName
from chatbench.policies import (
    AlternatingPolicy,
    DialoguePolicy,
    get_policy,
    policy_names,
    register_policy,
)

# (policy, humans, bots, turns_required) -> full episode as (role, index) pairs
HAND_WRITTEN_EPISODES = {
    ("alternating", 1, 1, 3): [("human", 0), ("bot", 0), ("human", 0), ("bot", 0),
                               ("human", 0), ("bot", 0)],
    ("alternating", 2, 1, 1): [("human", 0), ("bot", 0), ("human", 1), ("bot", 0)],
    ("alternating", 1, 2, 2): [("human", 0), ("bot", 0), ("bot", 1),
                               ("human", 0), ("bot", 0), ("bot", 1)],
    ("round_robin", 2, 1, 2): [("human", 0), ("human", 1), ("bot", 0),
                               ("human", 0), ("human", 1), ("bot", 0)],
    ("round_robin", 2, 0, 2): [("human", 0), ("human", 1), ("human", 0), ("human", 1)],
    ("round_robin", 1, 2, 1): [("human", 0), ("bot", 0), ("bot", 1)],
}


@pytest.mark.parametrize("key", sorted(HAND_WRITTEN_EPISODES))
def test_episode_matches_hand_written_sequence(key):
    policy_name, humans, bots, turns = key
    expected = HAND_WRITTEN_EPISODES[key]
    policy = get_policy(policy_name)
    assert policy.episode_length(humans, bots, turns) == len(expected)
    actual = [policy.slot_at(humans, bots, pos) for pos in range(len(expected))]
    assert [(s.role, s.index) for s in actual] == expected


@pytest.mark.parametrize("key", sorted(HAND_WRITTEN_EPISODES))
def test_episode_done_exactly_at_sequence_end(key):
    policy_name, humans, bots, turns = key
    expected = HAND_WRITTEN_EPISODES[key]
    policy = get_policy(policy_name)
    for pos in range(len(expected)):
        assert not policy.episode_done(humans, bots, turns, pos)
    assert policy.episode_done(humans, bots, turns, len(expected))


def test_zero_turns_is_done_immediately():
    for name in ("alternating", "round_robin"):
        assert get_policy(name).episode_done(1, 1, 0, 0)
        assert get_policy(name).episode_length(1, 1, 0) == 0


def test_slots_cycle_past_the_episode():
    policy = get_policy("alternating")
    assert policy.slot_at(1, 1, 6) == policy.slot_at(1, 1, 0)
    assert policy.slot_at(1, 1, 7) == policy.slot_at(1, 1, 1)


def test_policy_is_deterministic():
    policy = get_policy("round_robin")
    first = [policy.slot_at(2, 1, p) for p in range(12)]
    second = [policy.slot_at(2, 1, p) for p in range(12)]
    assert first == second


def test_builtin_policies_registered():
    assert {"alternating", "round_robin"} <= set(policy_names())


def test_custom_policy_registration_and_duplicates():
    class EveryOtherRound(DialoguePolicy):
        name = "test_custom"

        def round_slots(self, humans, bots):
            return AlternatingPolicy().round_slots(humans, bots)

    register_policy(EveryOtherRound())
    assert "test_custom" in policy_names()
    with pytest.raises(DuplicateName):
        register_policy(EveryOtherRound())
