import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfdlab.configfile import ConfigError, Key, as_bool, choice, expression, optional, parse_config, resolve
from tfdlab.exceptions import PreconditionViolation
from tfdlab.expressions import ExpressionError, compile_expression


def test_basic_expressions():
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(compile_expression("1 + x**2")(x), 1 + x**2)
    np.testing.assert_allclose(compile_expression("2 + cos(pi*x)")(x), 2 + np.cos(np.pi * x))
    np.testing.assert_allclose(compile_expression("x^3 - e")(x), x**3 - np.e)
    np.testing.assert_allclose(compile_expression("pos(x - 0.5)")(x), np.maximum(x - 0.5, 0))
    np.testing.assert_allclose(compile_expression("exp(-t)", "t")(x), np.exp(-x))


def test_constant_expression_broadcasts():
    f = compile_expression("3")
    assert f(np.zeros(4)).shape == (4,)
    assert f(np.zeros((2, 3))).tolist() == [[3.0] * 3] * 2
    assert f.expression == "3"


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_matches_python_arithmetic(a, b):
    f = compile_expression(f"({a!r}) * x - ({b!r}) / 2 + -x")
    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(f(x), a * x - b / 2 - x, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("__import__('os')", "unknown function"),
        ("y + 1", "unknown name 'y'"),
        ("x.real", "unsupported syntax"),
        ("sin(x, 2)", "exactly one argument"),
        ("'a'", "unsupported literal"),
        ("1 +", "cannot parse"),
        ("", "empty"),
        ("x if x else 1", "unsupported syntax"),
        ("[x]", "unsupported syntax"),
    ],
)
def test_rejected_expressions(text, fragment):
    with pytest.raises(ExpressionError, match=fragment):
        compile_expression(text)
    assert issubclass(ExpressionError, PreconditionViolation)


def test_parse_config_sections_and_comments():
    cfg = parse_config("# top\nalpha = 0.5  # order\n\n[same]\np_expr = 1\n[differ]\np_expr = 1 + x\n", "t.cfg")
    assert cfg.values == {"alpha": "0.5"}
    assert cfg.sections == {"same": {"p_expr": "1"}, "differ": {"p_expr": "1 + x"}}
    assert cfg.lines[(None, "alpha")] == 2 and cfg.lines[("differ", "p_expr")] == 7
    assert len(cfg.sha256) == 64


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("alpha = 1\njunk line\n", "t.cfg:2: expected 'key = value'"),
        ("alpha =\n", "t.cfg:1:"),
        ("a = 1\na = 2\n", "t.cfg:2: duplicate key 'a'"),
        ("[s]\n[s]\n", "t.cfg:2: duplicate section"),
    ],
)
def test_parse_errors_carry_line_numbers(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text, "t.cfg")


SCHEMA = {"alpha": Key(float, 0.5), "bc": Key(choice("neumann", "dirichlet"), "neumann"),
          "flag": Key(as_bool, False), "p": Key(expression(), "1"), "v": Key(optional(float), None)}


def test_resolve_defaults_and_conversion():
    out = resolve({}, SCHEMA)
    assert out["alpha"] == 0.5 and out["bc"] == "neumann" and out["flag"] is False and out["v"] is None
    assert out["p"](np.array([2.0]))[0] == 1.0
    cfg = parse_config("alpha = 0.25\nflag = yes\nv = none\n")
    out = resolve(cfg.values, SCHEMA, cfg)
    assert out["alpha"] == 0.25 and out["flag"] is True and out["v"] is None


def test_resolve_errors():
    cfg = parse_config("alpha = 0.5\nfoo = 1\n", "x.cfg")
    with pytest.raises(ConfigError, match=r"x.cfg:2: unknown key 'foo'.*valid keys: alpha, bc, flag, p, v"):
        resolve(cfg.values, SCHEMA, cfg)
    cfg = parse_config("bc = robin\n", "x.cfg")
    with pytest.raises(ConfigError, match="x.cfg:1: key 'bc'"):
        resolve(cfg.values, SCHEMA, cfg)
    cfg = parse_config("\np = sin(y)\n", "x.cfg")
    with pytest.raises(ConfigError, match="x.cfg:2: key 'p'.*unknown name"):
        resolve(cfg.values, SCHEMA, cfg)
