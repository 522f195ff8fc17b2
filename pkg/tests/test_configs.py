import json

import pytest

from blrkernels.configs import compression_factors, load_layer_configs, parse_layer_configs
from blrkernels.errors import ConfigError
from blrkernels.formats import Method


def test_shipped_table():
    cfgs = load_layer_configs()
    assert {c.model for c in cfgs} == {"Llama-7B", "Llama-3.2-1B", "GPT2-S", "ViT-B", "DiT-XL/2"}
    row = next(c for c in cfgs if c.model == "GPT2-S" and c.layer == "c_attn" and c.method is Method.BLAST)
    assert (row.i, row.o, row.r, row.b, row.layer_count) == (768, 2304, 192, 6, 12)
    assert all(c.method is not Method.DENSE for c in cfgs)
    assert any(not c.bench for c in cfgs)
    assert all(c.spec().shape[0] == c.n for c in cfgs)


def test_empty_and_comment_only():
    assert parse_layer_configs("") == []
    assert parse_layer_configs("# nothing\n\n") == []


def test_bad_rows_name_the_line():
    good = json.dumps({"model": "m", "layer": "l", "i": 8, "o": 8, "method": "Blast", "r": 2, "b": 2})
    with pytest.raises(ConfigError, match=r"cfg:2:.*unknown key"):
        parse_layer_configs(good + "\n" + good[:-1] + ', "rank": 4}', "cfg")
    with pytest.raises(ConfigError, match=r"cfg:1:.*invalid JSON"):
        parse_layer_configs("{oops", "cfg")
    with pytest.raises(ConfigError, match="missing"):
        parse_layer_configs('{"model": "m"}')
    with pytest.raises(ConfigError):
        parse_layer_configs(good.replace('"b": 2', '"b": 3'))
    with pytest.raises(ConfigError):
        parse_layer_configs(good.replace('"r": 2', '"r": "2"'))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_layer_configs(tmp_path / "absent.jsonl")


def test_record_round_trip():
    cfgs = load_layer_configs()
    text = "\n".join(json.dumps(c.as_record()) for c in cfgs)
    assert parse_layer_configs(text) == cfgs


def test_compression_factor_weighting():
    text = "\n".join(json.dumps(r) for r in [
        {"model": "m", "layer": "a", "i": 8, "o": 8, "method": "LowRank", "r": 2, "count": 3},
        {"model": "m", "layer": "b", "i": 8, "o": 16, "method": "LowRank", "r": 4, "count": 1},
    ])
    cf = compression_factors(parse_layer_configs(text))
    assert cf[("m", "LowRank")] == pytest.approx((3 * 64 + 128) / (3 * 32 + 96))
