"""Agent-turn summarizers: action tags from a pattern table, or truncation."""

from __future__ import annotations

import json
import re
from functools import lru_cache
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus.vocab import tokenize
from .schema import ACTIONS, FALLBACK_ACTION

DEFAULT_TRUNC_LEN = 20


@dataclass(frozen=True)
class ActionTable:
    """Ordered ``(pattern, tag)`` rules; the first matching pattern wins."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for pattern, tag in self.entries:
            if tag not in ACTIONS:
                raise ValueError(f"action tag {tag!r} is not in the {len(ACTIONS)}-action vocabulary")
            re.compile(pattern)
        object.__setattr__(self, "_compiled", tuple((re.compile(p, re.IGNORECASE), t) for p, t in self.entries))

    def match(self, text: str) -> str:
        for rx, tag in self._compiled:
            if rx.search(text):
                return tag
        return FALLBACK_ACTION

    def to_json(self) -> str:
        return json.dumps([{"pattern": p, "tag": t} for p, t in self.entries], indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ActionTable":
        return cls(tuple((e["pattern"], e["tag"]) for e in json.loads(text)))

    @classmethod
    def load(cls, path: str | Path) -> "ActionTable":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def table_from_templates() -> ActionTable:
    from .corpus.templates import AGENT_ACTIONS

    return ActionTable(tuple((pattern, tag) for tag, (pattern, _) in AGENT_ACTIONS.items()))


@lru_cache(maxsize=1)
def default_action_table() -> ActionTable:
    """The table shipped with the package (``data/action_table.json``)."""
    text = resources.files("emtod").joinpath("data/action_table.json").read_text(encoding="utf-8")
    return ActionTable.from_json(text)


def summarize_agent_turn(text: str, table: ActionTable | None = None) -> str:
    table = table or default_action_table()
    return table.match(text)


def truncate_agent_turn(text: str, max_tokens: int = DEFAULT_TRUNC_LEN) -> str:
    if max_tokens < 1:
        raise ValueError("max_tokens must be at least 1")
    return " ".join(tokenize(text)[:max_tokens])
