import math

import pytest

from finslerlab.config import ConfigError, ScenarioConfig, bundled_scenarios, resolve_config

GOOD = """\
name: demo
structure:
  family: randers
  drift: [0.3, 0]
  density: "-x1**2/2"
domain: {kind: square, center: [0, 0], radius: 1}
mesh: {h: 1/8}
solver: {tol: 1e-9}
experiments:
  - solve
  - {kind: poincare, radii: [0.5, 1]}
N: [3, inf]
seed: 4
"""


def test_parse_good_config():
    cfg = ScenarioConfig.loads(GOOD)
    assert cfg.name == "demo" and cfg.h == 0.125 and cfg.seed == 4
    assert cfg.N == (3.0, math.inf)
    assert cfg.solver.tol == 1e-9
    assert [e.kind for e in cfg.experiments] == ["solve", "poincare"]
    assert cfg.experiments[1].get("radii") == [0.5, 1]
    assert cfg.experiments[1].get("samples") == 50
    S = cfg.build_structure()
    assert S.family == "randers"
    assert cfg.build_mesh(S).n_nodes == 17 * 17


def test_round_trip_through_yaml():
    cfg = ScenarioConfig.loads(GOOD)
    again = ScenarioConfig.loads(cfg.to_yaml())
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("text, line, col, words", [
    (GOOD.replace("domain: {kind: square", "domain: {kapa: 1, kind: square"), 6, 10, "unknown key 'kapa'"),
    (GOOD.replace("h: 1/8", "h: -1"), 7, 11, "positive"),
    (GOOD.replace("  - solve", "  - solv"), 10, 5, "unknown experiment"),
    (GOOD.replace("N: [3, inf]", "N: [1]"), 12, 5, "N"),
    (GOOD.replace("seed: 4", "seed: 4.5"), 13, 7, "integer"),
    (GOOD.replace("family: randers", "family: finsler"), None, None, "family"),
])
def test_errors_carry_position(text, line, col, words):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.loads(text, "demo.yaml")
    assert words in str(info.value)
    if line is not None:
        assert (info.value.line, info.value.column) == (line, col)
        assert str(info.value).startswith(f"demo.yaml:{line}:{col}:")


def test_malformed_and_empty_yaml():
    with pytest.raises(ConfigError, match="malformed"):
        ScenarioConfig.loads("name: [unclosed\n")
    with pytest.raises(ConfigError, match="empty"):
        ScenarioConfig.loads("")


def test_missing_structure_rejected():
    with pytest.raises(ConfigError):
        ScenarioConfig.loads("name: x\n")


def test_bundled_scenarios_parse():
    names = bundled_scenarios()
    assert len(names) >= 5
    for name in names:
        cfg = ScenarioConfig.load(resolve_config(name))
        assert cfg.name == name
        assert cfg.experiments


def test_resolve_unknown_config():
    with pytest.raises(FileNotFoundError):
        resolve_config("no-such-scenario")
