import pytest
from hypothesis import given
from hypothesis import strategies as st

from emtod.agent import (
    ActionTable,
    default_action_table,
    summarize_agent_turn,
    table_from_templates,
    truncate_agent_turn,
)
from emtod.corpus.generator import CorpusConfig, generate_dialogues
from emtod.corpus.templates import AGENT_ACTIONS
from emtod.schema import ACTIONS, FALLBACK_ACTION


def test_shipped_table_matches_templates():
    assert default_action_table() == table_from_templates()
    tags = {t for _, t in default_action_table().entries}
    assert tags <= set(ACTIONS) and FALLBACK_ACTION not in tags
    assert len(tags) == len(ACTIONS) - 1


def test_template_messages_map_to_their_tag():
    for tag, (_, variants) in AGENT_ACTIONS.items():
        for text in variants:
            assert summarize_agent_turn(text) == tag, text
    assert summarize_agent_turn("ask_day" if "ask_day" in AGENT_ACTIONS else "") in ACTIONS


def test_unmatched_text_falls_back():
    assert summarize_agent_turn("Lovely weather in the hills today.") == FALLBACK_ACTION


def test_generated_agent_turns_recovered_exactly():
    n = 0
    for d in generate_dialogues(CorpusConfig(n_dialogues=500, seed=21)):
        for t in d.turns:
            if t.role == "agent":
                assert summarize_agent_turn(t.text) == t.gold_action
                n += 1
    assert n > 500


def test_first_match_wins():
    text = "Could you share a day and a time?"
    a = ActionTable((("day", "ask_day"), ("time", "ask_time")))
    b = ActionTable((("time", "ask_time"), ("day", "ask_day")))
    assert a.match(text) == "ask_day"
    assert b.match(text) == "ask_time"


def test_table_json_round_trip(tmp_path):
    table = default_action_table()
    table.save(tmp_path / "t.json")
    assert ActionTable.load(tmp_path / "t.json") == table
    with pytest.raises(ValueError, match="vocabulary"):
        ActionTable((("x", "not_a_tag"),))


@given(st.text(max_size=200))
def test_output_always_in_vocabulary(text):
    assert summarize_agent_turn(text) in ACTIONS


def test_truncation_examples():
    assert truncate_agent_turn("one two three", 10) == "one two three"
    ten = " ".join(f"w{i}" for i in range(10))
    assert truncate_agent_turn(ten, 4) == "w0 w1 w2 w3"
    assert truncate_agent_turn(ten, 1) == "w0"
    with pytest.raises(ValueError):
        truncate_agent_turn(ten, 0)
