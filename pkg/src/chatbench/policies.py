"""Dialogue policies: who speaks next, when bots fire, when the episode ends.

A policy is deterministic given the thread contents. It reduces to a repeating
round of turn slots; position in the round is the count of non-seed messages,
so seed turns never consume anyone's turn.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DuplicateName


@dataclass(frozen=True)
class TurnSlot:
    """One position in a round: a role and an index within that role group
    (0-based, ordered by join order)."""

    role: str  # "human" or "bot"
    index: int


class DialoguePolicy:
    """Base contract. Subclasses define the shape of one round of turns."""

    name: str = ""

    def round_slots(self, humans: int, bots: int) -> list[TurnSlot]:
        raise NotImplementedError

    def episode_length(self, humans: int, bots: int, turns_required: int) -> int:
        """Total non-seed messages in a complete episode; 0 means static mode."""
        if turns_required == 0:
            return 0
        return turns_required * len(self.round_slots(humans, bots))

    def slot_at(self, humans: int, bots: int, position: int) -> TurnSlot:
        """Slot owning the message at 0-based ``position``; cycles forever so
        chat can continue past the episode when the config allows it."""
        slots = self.round_slots(humans, bots)
        return slots[position % len(slots)]

    def episode_done(self, humans: int, bots: int, turns_required: int, position: int) -> bool:
        return position >= self.episode_length(humans, bots, turns_required)


class AlternatingPolicy(DialoguePolicy):
    """Every bot replies after each individual human message.

    With one human and one bot this is the classic human/bot alternation.
    """

    name = "alternating"

    def round_slots(self, humans: int, bots: int) -> list[TurnSlot]:
        slots: list[TurnSlot] = []
        for h in range(humans):
            slots.append(TurnSlot("human", h))
            for b in range(bots):
                slots.append(TurnSlot("bot", b))
        return slots


class RoundRobinPolicy(DialoguePolicy):
    """Humans speak once each in join order, then every bot replies."""

    name = "round_robin"

    def round_slots(self, humans: int, bots: int) -> list[TurnSlot]:
        slots = [TurnSlot("human", h) for h in range(humans)]
        slots.extend(TurnSlot("bot", b) for b in range(bots))
        return slots


_REGISTRY: dict[str, DialoguePolicy] = {}


def register_policy(policy: DialoguePolicy) -> None:
    if policy.name in _REGISTRY:
        raise DuplicateName(f"policy {policy.name!r} is already registered")
    _REGISTRY[policy.name] = policy


def get_policy(name: str) -> DialoguePolicy:
    return _REGISTRY[name]


def policy_names() -> frozenset[str]:
    return frozenset(_REGISTRY)


register_policy(AlternatingPolicy())
register_policy(RoundRobinPolicy())
