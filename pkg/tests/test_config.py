from __future__ import annotations

import pytest

from mlnash import GlobalConfig, LocalConfig
from mlnash.config import global_config, known_keys, load_config, local_config, parse_config
from mlnash.errors import ParseError, ValidationError


def test_parse_and_apply():
    text = """
    # solver limits
    time_limit = 12.5
    node_limit=40   # trailing comment
    eps_regret = 1e-8
    deterministic = yes
    lp_backend = highs
    max_starts = 3
    step_rule = fixed
    """
    values = parse_config(text)
    g = global_config(values)
    assert (g.time_limit, g.node_limit, g.eps_regret, g.deterministic, g.lp_backend) == (
        12.5, 40, 1e-8, True, "highs")
    loc = local_config(values)
    assert (loc.max_starts, loc.step_rule, loc.eps_regret) == (3, "fixed", 1e-8)


def test_defaults_untouched():
    assert global_config({}) == GlobalConfig()
    assert local_config({}) == LocalConfig()


@pytest.mark.parametrize("text,error", [
    ("time_limit", ParseError),
    ("time_limit = 1\ntime_limit = 2", ParseError),
    ("colour = red", ValidationError),
])
def test_parse_rejects(text, error):
    with pytest.raises(error):
        parse_config(text)


@pytest.mark.parametrize("values", [{"node_limit": "many"}, {"deterministic": "perhaps"},
                                    {"time_limit": "-1"}, {"lp_backend": "gurobi"}])
def test_bad_values(values):
    with pytest.raises(ValidationError):
        global_config(values)


def test_known_keys_cover_both_solvers():
    assert {"time_limit", "node_limit", "eps_regret", "eps_feas", "workers", "deterministic",
            "max_starts", "step_rule", "seed"} <= known_keys()


def test_load_config(tmp_path):
    path = tmp_path / "solver.cfg"
    path.write_text("workers = 2\nseed = 9\n")
    assert global_config(load_config(path)).workers == 2
    assert local_config(load_config(path)).seed == 9
