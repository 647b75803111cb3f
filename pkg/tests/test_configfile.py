import pytest

from dpp_lab.configfile import ConfigError, parse_config_text

BUILTIN = """
# benchmark run
problem = server-scheduling-3x2
V = 10.0
T = 5000
seed = 42
output = results
batch.num_paths = 500
batch.T = 1000
batch.epsilon = 0.2
batch.delta = 0.1
batch.checks = KeyFeature, QueueTail
sweep.V_list = 1, 10
sweep.checkpoints = 5
"""

INLINE = """
problem.L = 1
problem.z_max = 1.0
problem.B = 1.0
problem.V = 4.0
problem.events.0.probability = 0.5
problem.events.0.actions.0 = 0.0, 1.0
problem.events.0.actions.1 = 1.0, 0.0
problem.events.1.probability = 0.5
problem.events.1.actions.0 = 0.0, 0.0
problem.events.1.actions.1 = 1.0, -1.0
"""


def test_parse_builtin_config():
    cfg = parse_config_text(BUILTIN)
    assert cfg.problem_name == "server-scheduling-3x2"
    assert cfg.V == 10.0 and cfg.T == 5000 and cfg.seed == 42
    assert cfg.output == "results"
    assert cfg.num_paths == 500 and cfg.batch_T == 1000
    assert cfg.epsilon == 0.2 and cfg.delta == 0.1
    assert cfg.checks == ("KeyFeature", "QueueTail")
    assert cfg.sweep_v == (1.0, 10.0) and cfg.sweep_checkpoints == 5
    spec = cfg.build_spec()
    assert spec.V == 10.0 and spec.L == 3


def test_parse_inline_problem():
    cfg = parse_config_text(INLINE)
    spec = cfg.build_spec()
    assert spec.L == 1 and spec.V == 4.0
    assert len(spec.events) == 2
    assert spec.events[0].actions[0].z == (1.0,)
    assert spec.events[1].actions[1].z0 == 1.0


def test_top_level_v_overrides_inline():
    cfg = parse_config_text(INLINE + "\nV = 9.0\n")
    assert cfg.build_spec().V == 9.0


def test_unknown_key_is_line_anchored():
    with pytest.raises(ConfigError) as err:
        parse_config_text("problem = server-scheduling-3x2\nV = 1\nacme = 2\n")
    assert "line 3" in str(err.value) and "acme" in str(err.value)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config_text("V = 1\nV = 2\n")
    assert "duplicate" in str(err.value)


def test_bad_values_rejected():
    for body, fragment in [
        ("T = 0", "T"),
        ("T = soon", "integer"),
        ("batch.num_paths = 0", "num_paths"),
        ("batch.epsilon = -1", "epsilon"),
        ("batch.delta = 1.5", "delta"),
        ("batch.checks = Hopeful", "Hopeful"),
        ("V = -2", "V"),
        ("seed = -1", "seed"),
        ("problem.events.0.actions.0 = a, b", "numbers"),
        ("broken line", "key = value"),
    ]:
        with pytest.raises(ConfigError) as err:
            parse_config_text(body + "\n")
        assert fragment in str(err.value)


def test_builtin_and_inline_conflict():
    with pytest.raises(ConfigError):
        parse_config_text("problem = server-scheduling-3x2\nproblem.L = 1\n")


def test_missing_problem_fails_at_build():
    cfg = parse_config_text("V = 1.0\n")
    with pytest.raises(ConfigError):
        cfg.build_spec()


def test_builtin_needs_v():
    cfg = parse_config_text("problem = server-scheduling-3x2\n")
    with pytest.raises(ConfigError):
        cfg.build_spec()


def test_inline_action_arity_checked():
    bad = INLINE.replace("problem.events.0.actions.0 = 0.0, 1.0",
                         "problem.events.0.actions.0 = 0.0")
    with pytest.raises(ConfigError) as err:
        parse_config_text(bad).build_spec()
    assert "needs 2 values" in str(err.value)


def test_unknown_builtin_name():
    cfg = parse_config_text("problem = warp-drive\nV = 1.0\n")
    with pytest.raises(ConfigError):
        cfg.build_spec()
