"""Pointwise and property tests for the smoothed friction kernel."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slipflow.friction import grad_j_delta, j_delta


def test_outer_branch_value():
    v = np.array([0.06, 0.08])
    assert j_delta(v, 0.05) == pytest.approx(0.1, abs=1e-15)


def test_inner_branch_value():
    # |v| = 0.1 <= delta = 0.2: quadratic branch 0.01/0.4 + 0.1 = 0.125
    v = np.array([0.06, 0.08])
    assert j_delta(v, 0.2) == pytest.approx(0.125, abs=1e-15)


def test_boundary_uses_inner_branch():
    # At |v| = delta both branches agree; the inner one is used.
    v = np.array([0.3, 0.4])
    assert j_delta(v, 0.5) == pytest.approx(0.5, abs=1e-15)
    g = grad_j_delta(v, 0.5)
    assert np.allclose(g, v / 0.5)


def test_gradient_inner_branch():
    g = grad_j_delta(np.array([0.05, 0.0]), 0.1)
    assert np.allclose(g, [0.5, 0.0], atol=1e-15)


def test_gradient_outer_branch_unit():
    g = grad_j_delta(np.array([3.0, 4.0]), 0.1)
    assert np.allclose(g, [0.6, 0.8], atol=1e-15)


def test_zero_vector():
    assert grad_j_delta(np.zeros(2), 0.3) == pytest.approx([0.0, 0.0])
    assert j_delta(np.zeros(2), 0.3) == pytest.approx(0.15)


def test_rejects_nonpositive_delta():
    with pytest.raises(ValueError):
        j_delta(np.ones(2), 0.0)
    with pytest.raises(ValueError):
        grad_j_delta(np.ones(2), -1.0)


def test_vectorized_shapes():
    v = np.random.default_rng(1).normal(size=(7, 5, 2))
    assert j_delta(v, 0.2).shape == (7, 5)
    assert grad_j_delta(v, 0.2).shape == (7, 5, 2)


finite_component = st.floats(min_value=-50.0, max_value=50.0,
                             allow_nan=False, allow_infinity=False)
deltas = st.floats(min_value=1e-6, max_value=10.0,
                   allow_nan=False, allow_infinity=False)


@settings(max_examples=200, deadline=None)
@given(st.tuples(finite_component, finite_component), deltas)
def test_kernel_bounds(vec, delta):
    v = np.array(vec)
    r = float(np.linalg.norm(v))
    g = grad_j_delta(v, delta)
    val = float(j_delta(v, delta))
    assert np.linalg.norm(g) <= 1.0 + 1e-12
    assert g @ v >= -1e-15
    assert abs(val - r) <= delta + 1e-12
    # The dissipation defect g.v - |v| lies within [-delta/4, 0] up to roundoff.
    assert abs(g @ v - r) <= delta / 4.0 + 1e-12 * max(1.0, r)


@settings(max_examples=200, deadline=None)
@given(st.tuples(finite_component, finite_component),
       st.tuples(finite_component, finite_component), deltas)
def test_midpoint_convexity(vec, wec, delta):
    v = np.array(vec)
    w = np.array(wec)
    lhs = j_delta(0.5 * (v + w), delta)
    rhs = 0.5 * (j_delta(v, delta) + j_delta(w, delta))
    assert lhs <= rhs + 1e-13 * max(1.0, float(rhs))


@settings(max_examples=200, deadline=None)
@given(st.tuples(finite_component, finite_component),
       st.tuples(finite_component, finite_component), deltas)
def test_gradient_inequality(vec, wec, delta):
    # Convexity in subgradient form: j(w) >= j(v) + grad j(v).(w - v).
    v = np.array(vec)
    w = np.array(wec)
    gap = j_delta(w, delta) - j_delta(v, delta) - grad_j_delta(v, delta) @ (w - v)
    assert gap >= -1e-12 * max(1.0, float(j_delta(w, delta)))
