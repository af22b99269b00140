"""L1 time stepping for ``d_t^alpha u = u_xx - p(x) u (+ f)`` on ``(0, ell)``.

The Caputo derivative on a uniform time grid is approximated by

    d_t^alpha u(t_n) ~ dt**-alpha / Gamma(2 - alpha)
                       * sum_{k=0}^{n-1} b_k (u^{n-k} - u^{n-k-1}),
    b_k = (k+1)**(1-alpha) - k**(1-alpha),

and space by centred second differences. Neumann conditions are imposed
through ghost nodes, which keeps the boundary rows second order. Each
step is one tridiagonal solve.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs
from scipy.special import gamma

from .core import (
    CauchyTrace,
    CoefficientField,
    FieldSolution,
    ProblemConfig,
    TimeGrid,
    boundary_derivative,
    make_time_grid,
)
from .exceptions import SolverFailure

__all__ = [
    "l1_weights",
    "l1_prefactor",
    "caputo_l1",
    "solve_ibvp",
    "solve_heat_backward_euler",
    "extract_trace",
]


def l1_weights(alpha: float, n_steps: int) -> np.ndarray:
    """Weights ``b_0 .. b_{n-1}`` of the L1 formula."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    k = np.arange(int(n_steps) + 1, dtype=float) ** (1.0 - alpha)
    return np.diff(k)


def l1_prefactor(alpha: float, dt: float) -> float:
    return dt**-alpha / gamma(2.0 - alpha)


def caputo_l1(values: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    """L1 approximation of the Caputo derivative along the last axis.

    Entry ``n`` of the result approximates the derivative at ``t_n``;
    entry 0 is set to NaN (no formula at the initial time).
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[-1] - 1
    b = l1_weights(alpha, max(m, 1))
    du = np.diff(values, axis=-1)
    out = np.full(values.shape, np.nan)
    c0 = l1_prefactor(alpha, dt)
    for n in range(1, m + 1):
        # sum_k b_k du[n-1-k]
        out[..., n] = c0 * (du[..., :n] @ b[n - 1 :: -1])
    return out


def _as_time_grid(config: ProblemConfig, tgrid) -> TimeGrid:
    if isinstance(tgrid, TimeGrid):
        if abs(tgrid.horizon - config.horizon) > 1e-12 * config.horizon:
            raise ValueError("time grid horizon differs from config.horizon")
        return tgrid
    return make_time_grid(config.horizon, tgrid)


def _operator_bands(p: np.ndarray, h: float, shift: float, right_bc: str) -> np.ndarray:
    """Banded form of ``shift*I - D2 + diag(p)`` with ghost-node Neumann rows.

    For a Dirichlet right end the last node is eliminated.
    """
    n = p.size if right_bc == "neumann" else p.size - 1
    inv_h2 = 1.0 / (h * h)
    ab = np.zeros((3, n))
    ab[1] = shift + 2.0 * inv_h2 + p[:n]
    ab[0, 1:] = -inv_h2
    ab[2, :-1] = -inv_h2
    ab[0, 1] = -2.0 * inv_h2  # ghost node at x = 0
    if right_bc == "neumann":
        ab[2, -2] = -2.0 * inv_h2  # ghost node at x = ell
    return ab


def _march(config, p, a, tgrid, left_flux, source, shift_of, history):
    """Shared time loop. ``history`` toggles the L1 memory term."""
    xgrid = p.grid
    h = xgrid.h
    x = xgrid.nodes
    alpha = config.alpha
    dt = tgrid.dt
    m = tgrid.n_steps
    t = tgrid.nodes
    pv = p.samples
    if a.samples.shape != pv.shape:
        raise ValueError("initial value and coefficient live on different grids")

    c0 = shift_of(dt)
    ab = _operator_bands(pv, h, c0, config.right_bc)
    n_unknown = ab.shape[1]
    b = l1_weights(alpha, m) if history else None
    g_right = config.right_function()

    # the step matrix does not change with n: factor once, solve per step
    dl, d, du_, du2, ipiv, info = dgttrf(ab[2, :-1], ab[1], ab[0, 1:])
    if info != 0 or not np.all(np.isfinite(d)):
        raise SolverFailure(
            f"tridiagonal step matrix is singular (LAPACK info={info}); min(p)={pv.min():.3g}, shift={c0:.3g}"
        )

    u = np.empty((xgrid.n_nodes, m + 1))
    u[:, 0] = a.samples
    du = np.empty((xgrid.n_nodes, m))
    for n in range(1, m + 1):
        rhs = c0 * u[:, n - 1]
        if history and n > 1:
            rhs = rhs - c0 * (du[:, : n - 1] @ b[n - 1 : 0 : -1])
        if source is not None:
            rhs = rhs + source(x, t[n])
        if left_flux is not None:
            rhs[0] -= 2.0 * float(left_flux(t[n])) / h
        gr = 0.0 if config.right_value is None else float(g_right(t[n]))
        if config.right_bc == "neumann":
            rhs[-1] += 2.0 * gr / h
        else:
            rhs = rhs[:n_unknown].copy()
            rhs[-1] += gr / (h * h)
        sol, info = dgttrs(dl, d, du_, du2, ipiv, rhs)
        if info != 0 or not np.all(np.isfinite(sol)):
            raise SolverFailure(
                f"non-finite solution at step {n}; the operator is (nearly) singular "
                f"for min(p)={pv.min():.3g} with shift {c0:.3g}"
            )
        u[:n_unknown, n] = sol
        if n_unknown < xgrid.n_nodes:
            u[-1, n] = gr
        du[:, n - 1] = u[:, n] - u[:, n - 1]
    return u


def solve_ibvp(
    config: ProblemConfig,
    p: CoefficientField,
    a: CoefficientField,
    tgrid: Union[TimeGrid, int],
    left_flux: Optional[Callable] = None,
    source: Optional[Callable] = None,
) -> FieldSolution:
    """Solve the fractional initial-boundary value problem by the L1 scheme.

    Parameters
    ----------
    config : ProblemConfig
        Order, interval, horizon and the closure at ``x = ell``.
    p, a : CoefficientField
        Potential and initial value, sampled on the same spatial grid.
    tgrid : TimeGrid or int
        Time grid, or the number of steps on ``[0, config.horizon]``.
    left_flux : callable, optional
        ``u_x(0, t)``; homogeneous when omitted.
    source : callable, optional
        ``f(x, t)`` added to the right-hand side (manufactured solutions).

    Raises
    ------
    SolverFailure
        If a step's tridiagonal system is singular.
    """
    if p.grid.ell != config.ell:
        raise ValueError("coefficient grid does not cover [0, config.ell]")
    tgrid = _as_time_grid(config, tgrid)
    values = _march(
        config, p, a, tgrid, left_flux, source,
        shift_of=lambda dt: l1_prefactor(config.alpha, dt), history=True,
    )
    meta = {"scheme": "L1", "left_flux": "zero" if left_flux is None else "given"}
    return FieldSolution(values, config, p.grid, tgrid, meta)


def solve_heat_backward_euler(config, p, a, tgrid, left_flux=None, source=None) -> FieldSolution:
    """Classical ``u_t = u_xx - p u`` by backward Euler on the same grids."""
    tgrid = _as_time_grid(config, tgrid)
    values = _march(config, p, a, tgrid, left_flux, source, shift_of=lambda dt: 1.0 / dt, history=False)
    return FieldSolution(values, config, p.grid, tgrid, {"scheme": "backward-euler"})


def extract_trace(sol: FieldSolution, side: str = "left") -> CauchyTrace:
    """Lateral Cauchy data at ``x = 0``.

    ``side="right"`` reads the data at ``x = ell`` in the mirrored
    coordinate ``ell - x`` (so ``du0`` is the inward derivative there).
    """
    values = sol.values
    if values.shape[0] < 3:
        raise ValueError("trace extraction needs at least 3 spatial nodes")
    if side == "right":
        values = values[::-1]
    elif side != "left":
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return CauchyTrace(values[0].copy(), boundary_derivative(values, sol.xgrid), sol.tgrid)
