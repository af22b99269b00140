import numpy as np
import pytest

from conftest import field
from tfdlab.core import ProblemConfig, boundary_derivative, make_uniform_grid
from tfdlab.forward_l1 import caputo_l1, extract_trace, solve_ibvp
from tfdlab.goursat import solve_kernel
from tfdlab.transmutation import apply_transform, transform_matrix, transformed_equation_residual

P = lambda x: 1 + x**2
Q = lambda x: 2 + np.sin(2 * x)
A = lambda x: 2 + np.cos(np.pi * x)


def setup(n, m, flux=None, pf=P, qf=Q):
    g = make_uniform_grid(1.0, n)
    p, q, a = field(pf, g), field(qf, g, "q"), field(A, g, "a")
    u = solve_ibvp(ProblemConfig(alpha=0.5), p, a, m, left_flux=flux)
    K = solve_kernel(p, q)
    return u, K, q


def test_zero_kernel_is_identity():
    u, K, q = setup(30, 20, qf=P)
    v = apply_transform(u, K)
    assert np.array_equal(v.values, u.values)


def test_trace_preserved():
    u, K, q = setup(100, 50)
    v = apply_transform(u, K)
    assert np.array_equal(v.values[0], u.values[0])
    errs = []
    for n, m in ((50, 25), (100, 50)):
        uu, KK, _ = setup(n, m, flux=lambda t: 1.0 + t)
        vv = apply_transform(uu, KK)
        errs.append(np.abs(boundary_derivative(vv.values, uu.xgrid) - extract_trace(uu).du0).max())
    assert errs[0] / errs[1] >= 3.5


def test_linearity():
    u, K, q = setup(40, 10)
    T = transform_matrix(K)
    rng = np.random.default_rng(3)
    f, h = rng.standard_normal((2, 41))
    np.testing.assert_allclose(T @ (2 * f - 3 * h), 2 * (T @ f) - 3 * (T @ h), atol=1e-12)


def test_residual_equals_solver_residual_when_potentials_agree():
    u, K, q = setup(60, 80, qf=P)
    v = apply_transform(u, K)
    r = transformed_equation_residual(v, q, extract_trace(u))
    U = u.values
    own = caputo_l1(U, 0.5, u.tgrid.dt)[1:-1] - (U[2:] - 2 * U[1:-1] + U[:-2]) / u.xgrid.h**2 + q.samples[1:-1, None] * U[1:-1]
    assert r == pytest.approx(np.abs(own[:, 2:]).max(), abs=1e-12)
    assert r <= 1e-9


def test_residual_converges_under_joint_refinement():
    r = []
    for n, m in ((50, 100), (100, 200)):
        u, K, q = setup(n, m)
        r.append(transformed_equation_residual(apply_transform(u, K), q, extract_trace(u)))
    assert r[0] / r[1] >= 2.5


def test_boundary_term_ablation():
    u, K, q = setup(50, 100, flux=lambda t: 1 + np.sin(3 * t))
    v = apply_transform(u, K)
    tr = extract_trace(u)
    full = transformed_equation_residual(v, q, tr)
    ablated = transformed_equation_residual(v, q, tr, include_boundary_term=False)
    assert ablated >= 10 * full


def test_reverse_kernel_inverts_the_transform():
    gaps = []
    for n in (50, 100):
        u, K, q = setup(n, 20)
        v = apply_transform(u, K)
        back = apply_transform(v.as_solution(), solve_kernel(q, K.p))
        gaps.append(np.abs(back.values - u.values).max())
    assert gaps[1] <= 1e-4 and gaps[0] / gaps[1] >= 3


def test_grid_mismatch():
    u, K, q = setup(20, 5)
    _, K2, _ = setup(40, 5)
    with pytest.raises(ValueError):
        apply_transform(u, K2)
