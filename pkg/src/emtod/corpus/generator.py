"""Template-grammar generator for multi-party scheduling email threads."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..schema import (
    AFFIRMATIVE_INTENT,
    INTENTS,
    NEGATIVE_INTENT,
    QUESTION_ACTIONS,
    RESPONSE_ACTIONS,
    intents_to_multihot,
)
from . import templates as T
from .types import AGENT, USER, Dialogue, Sentence, Turn, dump

MODIFIER_INTENTS = ("add_attendee", "remove_attendee", "change_duration", "change_location", "change_meeting_mode")
# Second intent that may accompany a primary one in the same email.
COMPANION_INTENTS = {
    "schedule_meeting": MODIFIER_INTENTS,
    "reschedule_meeting": MODIFIER_INTENTS,
    "cancel_meeting": ("ask_status",),
    "add_attendee": ("remove_attendee", "change_duration", "change_location", "change_meeting_mode"),
    "remove_attendee": ("add_attendee", "change_duration", "change_location", "change_meeting_mode"),
    "change_duration": ("add_attendee", "remove_attendee", "change_location", "change_meeting_mode"),
    "change_location": ("add_attendee", "remove_attendee", "change_duration"),
    "change_meeting_mode": ("add_attendee", "remove_attendee", "change_duration"),
    "provide_availability": ("change_meeting_mode", "change_duration"),
    "confirm_time": ("add_attendee", "change_meeting_mode"),
    "decline_time": ("provide_availability",),
    "ask_status": ("add_attendee", "reschedule_meeting"),
}
# Relative frequency of explicit (non-ambiguous) intents after the first turn.
FOLLOWUP_WEIGHTS = {
    "schedule_meeting": 0.5,
    "cancel_meeting": 1.0,
    "reschedule_meeting": 1.2,
    "add_attendee": 1.0,
    "remove_attendee": 0.7,
    "change_duration": 0.7,
    "change_location": 0.7,
    "change_meeting_mode": 0.8,
    "provide_availability": 1.2,
    "confirm_time": 0.8,
    "decline_time": 0.6,
    "ask_status": 0.8,
    "no_action": 1.5,
}
MAX_USER_TURNS = 119


@dataclass
class CorpusConfig:
    n_dialogues: int = 6250
    mean_user_utterances_per_dialogue: float = 4.49
    ambiguity_rate: float = 0.30
    distractor_rate: float = 0.45
    multi_intent_rate: float = 0.15
    final_agent_rate: float = 0.5
    augmentation: tuple[str, ...] = T.AUGMENTATION_AXES
    seed: int = 0
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        self.augmentation = tuple(self.augmentation)
        self.split = tuple(float(x) for x in self.split)
        self.validate()

    def validate(self) -> None:
        if self.n_dialogues < 0:
            raise ValueError("n_dialogues must be non-negative")
        if self.mean_user_utterances_per_dialogue < 1:
            raise ValueError("mean_user_utterances_per_dialogue must be at least 1")
        for name in ("ambiguity_rate", "distractor_rate", "multi_intent_rate", "final_agent_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.distractor_rate >= 1.0:
            raise ValueError("distractor_rate must be below 1")
        if len(self.split) != 3 or any(not 0.0 <= f <= 1.0 for f in self.split):
            raise ValueError("split must be three fractions in [0, 1]")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(self.split)}")
        unknown = set(self.augmentation) - set(T.AUGMENTATION_AXES)
        if unknown:
            raise ValueError(f"unknown augmentation axes: {sorted(unknown)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["augmentation"] = list(self.augmentation)
        d["split"] = list(self.split)
        return d


_SLOT_RE = re.compile(r"\{(\w+)\}")


@dataclass
class _Thread:
    """Per-dialogue state shared by the template fillers."""

    rng: np.random.Generator
    config: CorpusConfig
    organizer: str
    attendees: list[str]
    topic: str
    fixed: dict[str, str] = field(default_factory=dict)

    def choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def slot(self, key: str) -> str:
        if key == "assistant":
            return T.ASSISTANT
        if key == "organizer":
            return self.organizer
        if key == "person":
            return self.choice(self.attendees)
        if key == "topic":
            return self.topic
        if key in self.fixed:
            return self.fixed[key]
        return self.choice(T.SLOT_VALUES[key])

    def fill(self, template: str) -> str:
        text = _SLOT_RE.sub(lambda m: self.slot(m.group(1)), template)
        return text[0].upper() + text[1:]


def _new_thread(rng: np.random.Generator, config: CorpusConfig) -> _Thread:
    picks = rng.permutation(len(T.PEOPLE))[: 2 + int(rng.integers(4))]
    people = [T.PEOPLE[i] for i in picks]
    thread = _Thread(rng=rng, config=config, organizer=people[0], attendees=people[1:], topic="")
    thread.topic = thread.choice(T.SLOT_VALUES["topic"])
    # Disabled augmentation axes collapse to the first surface value.
    for axis, slot in T.AXIS_SLOT.items():
        if axis not in config.augmentation:
            thread.fixed[slot] = T.SLOT_VALUES[slot][0]
    return thread


def _distractor_count(th: _Thread, n_relevant: int) -> int:
    rate = th.config.distractor_rate
    expected = rate / (1.0 - rate) * n_relevant
    trials = max(4, int(np.ceil(2 * expected)))
    return int(th.rng.binomial(trials, min(1.0, expected / trials)))


def _user_sentences(th: _Thread, relevant_texts: list[str]) -> list[Sentence]:
    sents = [Sentence(t, True) for t in relevant_texts]
    for _ in range(_distractor_count(th, len(sents))):
        kind = th.rng.random()
        if kind < 0.25:
            sents.insert(0, Sentence(th.fill(th.choice(T.USER_GREETINGS)), False))
        elif kind < 0.45:
            sents.append(Sentence(th.fill(th.choice(T.USER_SIGNOFFS)), False))
        else:
            pos = int(th.rng.integers(len(sents) + 1))
            sents.insert(pos, Sentence(th.fill(th.choice(T.DISTRACTORS)), False))
    return sents


def _sample_followup_intent(th: _Thread) -> str:
    names = list(FOLLOWUP_WEIGHTS)
    w = np.array([FOLLOWUP_WEIGHTS[n] for n in names])
    return names[int(th.rng.choice(len(names), p=w / w.sum()))]


def _explicit_intents(th: _Thread, first: bool) -> list[str]:
    if first:
        primary = "schedule_meeting" if th.rng.random() < 0.7 else _sample_followup_intent(th)
    else:
        primary = _sample_followup_intent(th)
    intents = [primary]
    if primary in COMPANION_INTENTS and th.rng.random() < _companion_prob(th.config):
        intents.append(th.choice(COMPANION_INTENTS[primary]))
    return intents


def _companion_prob(config: CorpusConfig) -> float:
    # Only explicit, non-"no_action" turns can take a second intent; scale so
    # the fraction over all user turns matches multi_intent_rate.
    w = FOLLOWUP_WEIGHTS
    eligible = (1.0 - config.ambiguity_rate) * (1.0 - w["no_action"] / sum(w.values()))
    return min(1.0, config.multi_intent_rate / max(eligible, 1e-9))


def _user_turn(th: _Thread, first: bool, prev_action: str | None, ambiguous: bool) -> Turn:
    if ambiguous:
        affirmative = prev_action not in NEGATIVE_INTENT or th.rng.random() < 0.75
        if affirmative:
            intent = AFFIRMATIVE_INTENT[prev_action]
            text = th.choice(T.AMBIGUOUS_AFFIRMATIVE)
        else:
            intent = NEGATIVE_INTENT[prev_action]
            text = th.choice(T.AMBIGUOUS_NEGATIVE)
        intents = [intent]
        relevant = [text]
    else:
        intents = _explicit_intents(th, first)
        relevant = [th.fill(th.choice(T.USER_INTENT_TEMPLATES[i])) for i in intents]
    if first:
        speaker = th.organizer
    elif intents == ["no_action"] or th.rng.random() < 0.5:
        speaker = th.choice(th.attendees)
    else:
        speaker = th.organizer
    return Turn(
        role=USER,
        speaker_id=speaker,
        sentences=_user_sentences(th, relevant),
        gold_intents=intents_to_multihot(sorted(set(intents), key=INTENTS.index)),
        ambiguous=ambiguous,
    )


def _agent_turn(th: _Thread, action: str) -> Turn:
    _, variants = T.AGENT_ACTIONS[action]
    sents = []
    if th.rng.random() < 0.85:
        sents.append(Sentence(th.fill(th.choice(T.AGENT_PREAMBLES)), False))
    sents.append(Sentence(th.fill(th.choice(variants)), True))
    if th.rng.random() < 0.6:
        sents.append(Sentence(th.fill(th.choice(T.AGENT_CLOSINGS)), False))
    return Turn(role=AGENT, speaker_id=T.ASSISTANT.lower(), sentences=sents, gold_action=action)


def ambiguity_followup_prob(config: CorpusConfig) -> float:
    """Per-turn chance that a non-first user turn is ambiguous.

    The first turn can never be ambiguous, so the per-turn chance is scaled
    up to make the expected fraction over all user turns match the target.
    """
    mean = config.mean_user_utterances_per_dialogue
    if mean <= 1:
        return 0.0
    return min(1.0, config.ambiguity_rate * mean / (mean - 1.0))


def generate_dialogue(config: CorpusConfig, index: int) -> Dialogue:
    rng = np.random.default_rng([config.seed, index])
    th = _new_thread(rng, config)
    n_user = min(MAX_USER_TURNS, int(rng.geometric(1.0 / config.mean_user_utterances_per_dialogue)))
    q_amb = ambiguity_followup_prob(config)
    ambiguous = [False] + [bool(rng.random() < q_amb) for _ in range(n_user - 1)]

    turns: list[Turn] = []
    prev_action = None
    for t in range(n_user):
        user = _user_turn(th, first=(t == 0), prev_action=prev_action, ambiguous=ambiguous[t])
        turns.append(user)
        last = t == n_user - 1
        if last and rng.random() >= config.final_agent_rate:
            break
        primary = next(INTENTS[i] for i, v in enumerate(user.gold_intents) if v)
        if not last and ambiguous[t + 1]:
            action = th.choice(QUESTION_ACTIONS)
        elif rng.random() < 0.2:
            action = th.choice(QUESTION_ACTIONS)
        else:
            action = th.choice(RESPONSE_ACTIONS[primary])
        turns.append(_agent_turn(th, action))
        prev_action = action
    return Dialogue(id=f"dlg-{config.seed}-{index:06d}", turns=turns)


def generate_dialogues(config: CorpusConfig) -> list[Dialogue]:
    return [generate_dialogue(config, i) for i in range(config.n_dialogues)]


def split_dialogues(dialogues: list[Dialogue], config: CorpusConfig) -> dict[str, list[Dialogue]]:
    n = len(dialogues)
    n_train = int(round(n * config.split[0]))
    n_val = min(n - n_train, int(round(n * config.split[1])))
    order = np.random.default_rng([config.seed, 2**31 - 1]).permutation(n)
    parts = {
        "train": sorted(order[:n_train]),
        "val": sorted(order[n_train : n_train + n_val]),
        "test": sorted(order[n_train + n_val :]),
    }
    return {k: [dialogues[i] for i in idx] for k, idx in parts.items()}


def generate_corpus(config: CorpusConfig, out_dir: str | Path | None = None) -> dict[str, list[Dialogue]]:
    """Generate and split the corpus; optionally write ``{train,val,test}.jsonl``."""
    config.validate()
    splits = split_dialogues(generate_dialogues(config), config)
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            for name, dialogues in splits.items():
                dump(dialogues, out / f"{name}.jsonl")
        except OSError as exc:
            raise OSError(f"cannot write corpus to {out}: {exc}") from exc
    return splits
