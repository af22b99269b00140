import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfdlab.core import (
    CauchyTrace,
    CoefficientField,
    FieldSolution,
    ProblemConfig,
    boundary_derivative,
    cumulative_trapezoid_weights,
    local_cubic_interp,
    make_time_grid,
    make_uniform_grid,
    trapezoid,
)


def test_grid_examples():
    assert np.array_equal(make_uniform_grid(1.0, 4).nodes, [0, 0.25, 0.5, 0.75, 1.0])
    assert np.array_equal(make_uniform_grid(2.0, 1).nodes, [0.0, 2.0])
    assert make_uniform_grid(np.pi, 8).h == pytest.approx(np.pi / 8, rel=1e-15)


@pytest.mark.parametrize("ell, n", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, -3), (1.0, 2.5)])
def test_grid_rejects_bad_input(ell, n):
    with pytest.raises(ValueError):
        make_uniform_grid(ell, n)


@given(st.floats(1e-3, 1e3), st.integers(1, 2000))
def test_grid_nodes_formula(ell, n):
    g = make_uniform_grid(ell, n)
    k = np.arange(n + 1)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == ell
    np.testing.assert_allclose(g.nodes, k * ell / n, rtol=1e-14, atol=1e-14 * ell)


def test_time_grid():
    t = make_time_grid(2.0, 8)
    assert t.dt == 0.25 and t.nodes[-1] == 2.0 and t.nodes[0] == 0.0
    with pytest.raises(ValueError):
        make_time_grid(0.0, 8)


def test_problem_config_validation():
    with pytest.raises(ValueError, match=r"\(0, 1\)"):
        ProblemConfig(alpha=1.5)
    with pytest.raises(ValueError):
        ProblemConfig(alpha=0.5, ell=0.0)
    with pytest.raises(ValueError):
        ProblemConfig(alpha=0.5, horizon=-1.0)
    with pytest.raises(ValueError):
        ProblemConfig(alpha=0.5, right_bc="robin")
    cfg = ProblemConfig(alpha=0.5)
    assert cfg.right_bc == "neumann"
    assert cfg.right_function()(np.array([0.3]))[0] == 0.0
    assert ProblemConfig(alpha=0.5, right_value=2.0).right_function()(1.0) == 2.0


def test_trapezoid_examples(unit_grid):
    x = unit_grid.nodes
    assert trapezoid(np.ones_like(x), unit_grid) == 1.0
    assert trapezoid(x, unit_grid) == pytest.approx(0.5, abs=1e-15)
    # composite rule error for x^2 is h^2/6 exactly
    val = trapezoid(x**2, unit_grid)
    assert abs(val - 1 / 3) <= 2e-5
    assert val - 1 / 3 == pytest.approx(unit_grid.h**2 / 6, rel=1e-9)
    with pytest.raises(ValueError):
        trapezoid(x, unit_grid, upto=101)
    with pytest.raises(ValueError):
        trapezoid(x, unit_grid, upto=-1)


@given(st.lists(st.floats(-10, 10), min_size=5, max_size=30), st.floats(-3, 3), st.data())
def test_trapezoid_linear_and_additive(vals, c, data):
    f = np.array(vals)
    g = np.cos(np.arange(f.size))
    h = 0.1
    n = f.size - 1
    k = data.draw(st.integers(0, n))
    assert trapezoid(c * f + g, h) == pytest.approx(c * trapezoid(f, h) + trapezoid(g, h), abs=1e-9)
    whole = trapezoid(f, h)
    split = trapezoid(f, h, upto=k) + trapezoid(f[k:], h)
    assert whole == pytest.approx(split, abs=1e-9)


def test_cumulative_weights_match_trapezoid(unit_grid):
    f = np.sin(3 * unit_grid.nodes)
    W = cumulative_trapezoid_weights(unit_grid.n_nodes, unit_grid.h)
    expect = [trapezoid(f, unit_grid, upto=i) for i in range(unit_grid.n_nodes)]
    np.testing.assert_allclose(W @ f, expect, atol=1e-15)


def test_boundary_derivative_examples(unit_grid):
    x = unit_grid.nodes
    assert boundary_derivative(x, unit_grid) == pytest.approx(1.0, abs=1e-12)
    assert boundary_derivative(x**2, unit_grid) == pytest.approx(0.0, abs=1e-12)
    g = make_uniform_grid(1.0, 100)
    assert abs(boundary_derivative(np.cos(g.nodes), g)) <= 1e-4
    with pytest.raises(ValueError):
        boundary_derivative(np.array([1.0, 2.0]), 0.1)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 1.0))
def test_boundary_derivative_exact_on_quadratics(c0, c1, c2, h):
    x = np.arange(6) * h
    assert boundary_derivative(c0 + c1 * x + c2 * x**2, h) == pytest.approx(c1, abs=1e-9 * (1 + abs(c2) + abs(c1) + abs(c0) / h))


def test_boundary_derivative_along_axis():
    g = make_uniform_grid(1.0, 10)
    U = np.outer(g.nodes, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(boundary_derivative(U, g), [1.0, 2.0, 3.0])


def test_local_cubic_is_exact_on_cubics_and_local():
    g = make_uniform_grid(1.0, 10)
    f = lambda x: 1 - 2 * x + x**3
    xs = np.linspace(0, 1, 37)
    np.testing.assert_allclose(local_cubic_interp(f(g.nodes), g.h, xs), f(xs), atol=1e-13)
    s = np.zeros(g.n_nodes)
    s[8:] = 1.0
    # cells well inside the zero run see only zeros
    assert np.abs(local_cubic_interp(s, g.h, np.linspace(0, 0.55, 23))).max() <= 1e-15


def test_coefficient_field(unit_grid):
    p = CoefficientField.from_function(lambda x: x**2, unit_grid)
    assert p.evaluate(0.55) == pytest.approx(0.3025)
    sampled = CoefficientField(p.samples, unit_grid)
    assert sampled.evaluate(0.55) == pytest.approx(0.3025, abs=1e-12)
    with pytest.raises(ValueError):
        CoefficientField(np.zeros(5), unit_grid)
    with pytest.raises(ValueError):
        p.samples[0] = 1.0
    s = p + 1.0
    assert s.evaluate(0.5) == pytest.approx(1.25)


def test_solution_and_trace_shapes(unit_grid):
    cfg = ProblemConfig(alpha=0.5)
    t = make_time_grid(1.0, 4)
    with pytest.raises(ValueError):
        FieldSolution(np.zeros((3, 5)), cfg, unit_grid, t)
    with pytest.raises(ValueError):
        CauchyTrace(np.zeros(5), np.zeros(4), t)
    sol = FieldSolution(np.zeros((101, 5)), cfg, unit_grid, t, {"scheme": "x"})
    assert sol.echo()["N"] == 100 and sol.echo()["M"] == 4 and sol.echo()["scheme"] == "x"
