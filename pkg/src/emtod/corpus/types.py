"""Dialogue records and their JSONL serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..schema import ACTIONS, INTENTS, N_ACTIONS, N_INTENTS

USER = "user"
AGENT = "agent"


class CorpusError(ValueError):
    """Malformed corpus record; message carries the file and line number."""


@dataclass
class Sentence:
    text: str
    relevant: bool

    def to_dict(self) -> dict:
        return {"text": self.text, "relevant": self.relevant}


@dataclass
class Turn:
    role: str
    speaker_id: str
    sentences: list[Sentence]
    gold_intents: list[int] | None = None
    gold_action: str | None = None
    ambiguous: bool = False

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @property
    def is_user(self) -> bool:
        return self.role == USER

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "speaker_id": self.speaker_id,
            "sentences": [s.to_dict() for s in self.sentences],
            "gold_intents": self.gold_intents,
            "gold_action": self.gold_action,
            "ambiguous": self.ambiguous,
        }


@dataclass
class Dialogue:
    id: str
    turns: list[Turn] = field(default_factory=list)

    def user_turn_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.role == USER]

    def prefix(self, turn_index: int) -> list[Turn]:
        """Context through ``turn_index`` (which must be a user turn)."""
        return self.turns[: turn_index + 1]

    def to_dict(self) -> dict:
        return {"id": self.id, "turns": [t.to_dict() for t in self.turns]}


def dialogue_to_json(d: Dialogue) -> str:
    return json.dumps(d.to_dict(), ensure_ascii=False, separators=(",", ":"))


def dialogue_from_dict(obj: dict) -> Dialogue:
    turns = []
    for t in obj["turns"]:
        turns.append(
            Turn(
                role=t["role"],
                speaker_id=t["speaker_id"],
                sentences=[Sentence(text=s["text"], relevant=bool(s["relevant"])) for s in t["sentences"]],
                gold_intents=None if t.get("gold_intents") is None else [int(v) for v in t["gold_intents"]],
                gold_action=t.get("gold_action"),
                ambiguous=bool(t.get("ambiguous", False)),
            )
        )
    return Dialogue(id=obj["id"], turns=turns)


def _parse_lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: record is not a JSON object")
            yield lineno, obj


def load(path: str | Path) -> list[Dialogue]:
    path = Path(path)
    out = []
    for lineno, obj in _parse_lines(path):
        try:
            out.append(dialogue_from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{path}:{lineno}: malformed dialogue record ({exc!r})") from exc
    return out


def serialize(dialogues: list[Dialogue]) -> str:
    return "".join(dialogue_to_json(d) + "\n" for d in dialogues)


def dump(dialogues: list[Dialogue], path: str | Path) -> None:
    Path(path).write_text(serialize(dialogues), encoding="utf-8")


def _record_violations(obj: dict) -> list[str]:
    v: list[str] = []
    if not isinstance(obj.get("id"), str) or not obj.get("id"):
        v.append("dialogue id must be a non-empty string")
    turns = obj.get("turns")
    if not isinstance(turns, list) or not turns:
        return v + ["dialogue must have at least one turn"]
    for i, t in enumerate(turns):
        where = f"turn {i}"
        role = t.get("role")
        expected = USER if i % 2 == 0 else AGENT
        if role not in (USER, AGENT):
            v.append(f"{where}: role must be 'user' or 'agent', got {role!r}")
            continue
        if role != expected:
            v.append(f"{where}: turns must alternate user/agent starting with user")
        if not isinstance(t.get("speaker_id"), str) or not t.get("speaker_id"):
            v.append(f"{where}: speaker_id must be a non-empty string")
        sents = t.get("sentences")
        if not isinstance(sents, list) or not sents:
            v.append(f"{where}: at least one sentence required")
        else:
            for j, s in enumerate(sents):
                if not isinstance(s, dict) or not isinstance(s.get("text"), str) or not s["text"].strip():
                    v.append(f"{where} sentence {j}: text must be non-empty")
                elif not isinstance(s.get("relevant"), bool):
                    v.append(f"{where} sentence {j}: relevant must be a boolean")
        gi, ga = t.get("gold_intents"), t.get("gold_action")
        if role == USER:
            if ga is not None:
                v.append(f"{where}: user turn must not carry gold_action")
            if not isinstance(gi, list):
                v.append(f"{where}: user turn must carry gold_intents")
            elif len(gi) != N_INTENTS:
                v.append(f"{where}: gold_intents must have exactly {N_INTENTS} entries, got {len(gi)}")
            elif any(x not in (0, 1) for x in gi) or not any(gi):
                v.append(f"{where}: gold_intents must be a non-empty 0/1 vector")
        else:
            if gi is not None:
                v.append(f"{where}: agent turn must not carry gold_intents")
            if ga not in ACTIONS:
                v.append(f"{where}: agent gold_action {ga!r} not in the {N_ACTIONS}-action vocabulary")
        if not isinstance(t.get("ambiguous", False), bool):
            v.append(f"{where}: ambiguous must be a boolean")
    return v


def validate(path: str | Path) -> list[str]:
    """Return a list of rule violations (empty means the file is valid).

    Raises :class:`CorpusError` for records that are not parseable JSON.
    """
    path = Path(path)
    problems = []
    # Vocabulary sizes are fixed by the schema module; checked here so a
    # mismatched build cannot silently write a corpus.
    if len(INTENTS) != 13:
        problems.append(f"schema: intent vocabulary has {len(INTENTS)} entries, expected 13")
    if len(ACTIONS) != 35:
        problems.append(f"schema: action vocabulary has {len(ACTIONS)} entries, expected 35")
    seen: set[str] = set()
    for lineno, obj in _parse_lines(path):
        for msg in _record_violations(obj):
            problems.append(f"{path.name}:{lineno}: {msg}")
        did = obj.get("id")
        if isinstance(did, str):
            if did in seen:
                problems.append(f"{path.name}:{lineno}: duplicate dialogue id {did!r}")
            seen.add(did)
    return problems
