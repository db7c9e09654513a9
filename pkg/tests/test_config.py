import pytest
from hypothesis import given, settings, strategies as st

from ducktrap.config import (ConfigError, ScenarioConfig, parse_config, parse_lambda_grid, parse_point,
                             serialize_config)
from ducktrap.core import SystemKind


def test_defaults_build_specs():
    cfg = ScenarioConfig().validate()
    assert cfg.spec().kind is SystemKind.PIECEWISE_CANARD
    fold = ScenarioConfig(family="fold", h="sine", eps=1e-3).validate().spec()
    assert fold.kind is SystemKind.PIECEWISE_FOLD and fold.h is not None


def test_parse_example():
    text = """
[system]
family = canard
piecewise = false

[params]
eps = 0.005
lambda = -0.00225

[run]
starts = -0.2,0.09; -0.15,0.08
lambda_grid = 1.5*lH, 0.2*lc, -1e-3
"""
    cfg = parse_config(text)
    assert cfg.lam == -0.00225 and cfg.eps == 0.005 and not cfg.piecewise
    assert cfg.starts == ((-0.2, 0.09), (-0.15, 0.08))
    grid = parse_lambda_grid(cfg)
    assert grid[0] == pytest.approx(1.5 * (-0.5 * 0.9 * 0.005))
    assert grid[1] == pytest.approx(0.2 * 0.25 * (1.0 - 0.9) * 0.005)
    assert grid[2] == -1e-3


@pytest.mark.parametrize("text", [
    "[system]\nfamily = duck\n",
    "[params]\neps = abc\n",
    "[params]\neps = 0.5\n",
    "[nowhere]\nx = 1\n",
    "[params]\nfoo = 1\n",
    "[system]\npiecewise = maybe\n",
    "[run]\nstarts = 1,2,3\n",
    "[run]\nlambda_grid = 2*lq\n",
    "not an ini file",
])
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_point():
    assert parse_point(" -0.2 , 0.09 ") == (-0.2, 0.09)
    for bad in ("1", "a,b", "inf,0"):
        with pytest.raises(ConfigError):
            parse_point(bad)


@st.composite
def configs(draw):
    rho = draw(st.floats(0.1, 0.5))
    lam0 = draw(st.floats(0.01, 0.1))
    return ScenarioConfig(
        family=draw(st.sampled_from(["canard", "fold"])),
        piecewise=draw(st.booleans()),
        preset=draw(st.sampled_from(["paper-fig", "linear"])),
        h=draw(st.sampled_from(["zero", "parabola", "sine"])),
        eps=draw(st.floats(1e-6, rho * rho)),
        lam=draw(st.floats(-lam0, lam0)),
        rho=rho, lambda0=lam0,
        starts=tuple(draw(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), max_size=3))),
        lambda_grid=tuple(draw(st.lists(st.sampled_from(["1.5*lH", "0.2*lc", "-6.75e-3", "2*lc"]),
                                        max_size=4))),
        eps_list=tuple(draw(st.lists(st.floats(1e-5, 1e-2), max_size=4))),
        x_in=draw(st.one_of(st.none(), st.floats(-1, -0.5))),
        seed=draw(st.integers(0, 2 ** 31)),
        csv=draw(st.sampled_from(["", "out.csv"])),
        C5=draw(st.floats(0.5, 5)),
        lambda_star=draw(st.one_of(st.none(), st.floats(-0.01, 0.0))),
    )


@settings(max_examples=100, deadline=None)
@given(configs())
def test_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg
