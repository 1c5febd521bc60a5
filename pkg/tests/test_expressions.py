import numpy as np
import pytest

from slipflow import ConfigError, compile_field, parse_field
from slipflow.expressions import evaluate_fields


def test_parse_accepts_the_documented_grammar():
    expr = parse_field("1 + 0.5*sin(2*pi*x)*cos(pi*y) - exp(-y)/2")
    assert {str(s) for s in expr.free_symbols} == {"x", "y"}


def test_caret_means_exponentiation():
    f = compile_field("cos(pi*y)^2")
    y = np.linspace(0.0, 1.0, 7)
    np.testing.assert_allclose(f(np.zeros_like(y), y), np.cos(np.pi * y) ** 2,
                               rtol=0, atol=1e-15)


def test_compiled_field_matches_numpy_oracle():
    f = compile_field("2 + sin(2*pi*x)*cos(pi*y) + x*y/3", allow_t=False)
    rng = np.random.default_rng(3)
    x = rng.uniform(0.0, 1.0, 40)
    y = rng.uniform(0.0, 1.0, 40)
    want = 2 + np.sin(2 * np.pi * x) * np.cos(np.pi * y) + x * y / 3
    np.testing.assert_allclose(f(x, y), want, rtol=1e-14)


def test_constants_broadcast_to_the_grid_shape():
    f = compile_field("1.0")
    x = np.zeros(12)
    out = f(x, x)
    assert out.shape == x.shape
    assert np.all(out == 1.0)


def test_time_needs_explicit_permission():
    with pytest.raises(ConfigError, match="outside the grammar: t"):
        parse_field("sin(t)*x")
    expr = parse_field("sin(t)*x", allow_t=True)
    assert "t" in {str(s) for s in expr.free_symbols}


def test_unknown_symbols_are_named():
    with pytest.raises(ConfigError, match="outside the grammar: z"):
        parse_field("x + z")


def test_unknown_functions_are_named():
    with pytest.raises(ConfigError, match="functions outside the grammar: tan"):
        parse_field("tan(x)")


def test_garbage_is_rejected():
    with pytest.raises(ConfigError, match="could not parse"):
        parse_field("1 +* 2")


def test_time_dependent_field_evaluates_at_given_time():
    f = compile_field("x*exp(-t)", allow_t=True)
    x = np.linspace(0.0, 1.0, 5)
    np.testing.assert_allclose(f(x, x, t=2.0), x * np.exp(-2.0), rtol=1e-15)
    # default evaluation time is zero
    np.testing.assert_allclose(f(x, x), x, rtol=1e-15)


def test_evaluate_fields_stacks_components():
    x = np.linspace(0.0, 1.0, 9)
    y = np.linspace(0.0, 1.0, 9)
    out = evaluate_fields(["x", "y"], x, y)
    assert out.shape == (2, 9)
    np.testing.assert_allclose(out[0], x)
    np.testing.assert_allclose(out[1], y)
