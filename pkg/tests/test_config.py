import json

import pytest

from emtod.config import FIELD_HELP, RunConfig, describe_sections
from emtod.errors import ConfigError


def test_defaults_round_trip():
    cfg = RunConfig()
    cfg.validate()
    back = RunConfig.from_dict(json.loads(cfg.to_json()))
    assert back.to_dict() == cfg.to_dict()
    assert set(cfg.to_dict()) == {"corpus", "scopeit", "train", "model", "paths"}


def test_help_covers_every_field():
    d = RunConfig().to_dict()
    for sec in ("corpus", "scopeit", "train", "model", "paths"):
        assert set(FIELD_HELP[sec]) == set(d[sec]), sec
    assert set(FIELD_HELP["encoder"]) == set(d["model"]["dialog"])
    text = describe_sections(("model", "encoder"))
    assert "aggregator" in text and "n_segments" in text and "model.dialog / model.turn" in text


@pytest.mark.parametrize("doc, where", [
    ({"bogus": {}}, "bogus"),
    ({"train": {"learning_rate": 1}}, "learning_rate"),
    ({"model": {"dialog": {"width": 3}}}, "model.dialog"),
    ({"corpus": {"seeds": 1}}, "seeds"),
])
def test_unknown_keys_rejected(doc, where):
    with pytest.raises(ConfigError, match=where):
        RunConfig.from_dict(doc)


def test_invalid_values_rejected():
    cfg = RunConfig.from_dict({"train": {"lr": -1}})
    with pytest.raises(ConfigError, match="lr"):
        cfg.validate()
    cfg = RunConfig.from_dict({"model": {"aggregator": "sum"}})
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = RunConfig.from_dict({"scopeit": {"tau": 2.0}})
    with pytest.raises(ConfigError, match="tau"):
        cfg.validate()


def test_load_reports_json_line(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{\n  "train": {\n    "lr": ,\n  }\n}\n')
    with pytest.raises(ConfigError, match="line 3"):
        RunConfig.load(path)
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.load(tmp_path / "missing.json")


def test_model_section_overrides_train_model():
    cfg = RunConfig.from_dict({"train": {"freeze": ["dialog"]}, "model": {"aggregator": "concat"}})
    assert cfg.model.aggregator == "concat"
    assert cfg.train.freeze == ("dialog",)
