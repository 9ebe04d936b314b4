import pytest
from hypothesis import given, strategies as st

from spinbound import config as cfg
from spinbound.errors import ConfigError


def test_defaults_resolved():
    c = cfg.parse("subcommand=resist")
    assert c.params["x_list"] == (8, 16, 32, 64)
    assert c.master_seed == 0 and c.output_path == "out.csv"


def test_comments_and_whitespace():
    c = cfg.parse("# a run\nsubcommand = mc   # trailing\n\nbeta=2.5\nx_list = 1, 2,3\n")
    assert c.params["beta"] == 2.5
    assert c.params["x_list"] == (1, 2, 3)


@pytest.mark.parametrize("text,word", [
    ("subcommand=mc\nbogus=1", "bogus"),
    ("subcommand=nope", "nope"),
    ("beta=1", "subcommand"),
    ("subcommand=perc\nexperiment=other", "other"),
    ("subcommand=mc\nsweeps=ten", "sweeps"),
    ("subcommand=mc\nbeta", "beta"),
])
def test_rejects(text, word):
    with pytest.raises(ConfigError, match=word):
        cfg.parse(text)


def test_overrides_win():
    c = cfg.parse("subcommand=mc\nbeta=2", {"beta": "3", "seed": "7"})
    assert c.params["beta"] == 3.0 and c.master_seed == 7


@given(st.sampled_from(sorted(cfg.SCHEMAS)), st.integers(0, 2 ** 62),
       st.floats(0.01, 100, allow_nan=False))
def test_roundtrip(sub, seed, x):
    key = next(k for k, (p, d) in cfg.SCHEMAS[sub].items() if p is float)
    c = cfg.resolve(sub, {key: repr(x)}, seed, "o/x.csv")
    again = cfg.parse(cfg.serialize(c))
    assert again == c
    assert cfg.serialize(again) == cfg.serialize(c)


def test_load(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("subcommand=lemmas\nk_max=50\n")
    assert cfg.load(p).params["k_max"] == 50
