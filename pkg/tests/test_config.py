import math

import pytest

from fracflow.config import DEFAULTS, parse_config
from fracflow.errors import ConfigError
from fracflow.fields import Boundary
from fracflow.heat_solver import Integrator
from fracflow.kernel_core import NormalizationMode

MINIMAL = """
[grid]
ndim = 1
n = 64

[operator]
beta = 0.5
"""


def test_minimal_heat_config():
    cfg = parse_config(MINIMAL)
    echo = cfg.echo()
    assert echo["grid"]["n"] == 64 and echo["operator"]["beta"] == 0.5
    assert echo["heat"] == DEFAULTS["heat"]
    assert echo["output"]["format"] == "csv"
    heat = cfg.heat()
    assert heat.integrator is Integrator.EXPONENTIAL
    assert heat.mode is NormalizationMode.UNIT_MASS
    assert cfg.grid().boundary is Boundary.PERIODIC
    assert cfg.backend is None


def test_empty_document_gives_defaults():
    assert parse_config("").echo() == DEFAULTS


def test_beta_out_of_range():
    with pytest.raises(ConfigError, match=r"beta must lie in \(0,1\)") as info:
        parse_config("[operator]\nbeta = 1.0\n")
    assert info.value.problems == ["line 2: [operator] beta: beta must lie in (0,1)"]


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[operator]\nbetta = 0.5\n")
    assert info.value.problems == ["line 2: unknown key 'betta' in [operator]"]


def test_all_problems_collected():
    text = "[grid]\nn = 'x'\n[heat]\nkappa = true\n[nope]\na = 1\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    problems = info.value.problems
    assert len(problems) == 3
    assert problems[0].startswith("line 2: [grid] n: expected int")
    assert problems[1].startswith("line 4: [heat] kappa: expected float")
    assert problems[2] == "line 5: unknown section [nope]"


def test_value_problems_collected():
    with pytest.raises(ConfigError) as info:
        parse_config("[heat]\ndt = -1.0\nsteps = -2\n[output]\nformat = 'xml'\n")
    assert len(info.value.problems) == 3


def test_overrides_win_and_are_labelled():
    cfg = parse_config(MINIMAL, {"operator.beta": 0.7, "grid.n": 32})
    assert cfg["operator"]["beta"] == 0.7 and cfg["grid"]["n"] == 32
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL, {"operator.beta": 2.0})
    assert info.value.problems[0].startswith("command line: [operator] beta")


def test_int_accepted_for_float():
    cfg = parse_config("[heat]\nkappa = 2\n")
    assert cfg["heat"]["kappa"] == 2.0 and isinstance(cfg["heat"]["kappa"], float)


def test_non_finite_rejected():
    with pytest.raises(ConfigError, match="finite"):
        parse_config("[heat]\nkappa = inf\n")


def test_bad_expression():
    with pytest.raises(ConfigError, match="heat"):
        parse_config("[heat]\nsource = \"import os\"\n")


def test_toml_syntax_error():
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config("[grid\n")


def test_ns_config_built():
    cfg = parse_config(
        "[grid]\nndim = 2\nn = 32\n[ns]\ninitial = ['sin(y)', '0']\nforce = ['0', '1']\ndt = 0.01\n"
    ).ns()
    assert cfg.dt == 0.01 and len(cfg.force) == 2
    assert parse_config("[grid]\nndim = 2\n").ns().dt is None
    assert cfg.grid.length[0] == pytest.approx(2 * math.pi)
