"""Eigenfunction-expansion solver used as an independent forward oracle.

The finite-difference operator ``-D2 + diag(p)`` with ghost-node Neumann
rows is not symmetric, but it is self-adjoint in the trapezoid-weighted
inner product ``<f, g> = sum_i w_i f_i g_i``. Conjugating by ``W**(1/2)``
gives a symmetric tridiagonal matrix, whose eigenpairs are mapped back to
W-orthonormal eigenvectors. The time dependence of each mode is a
Mittag-Leffler factor, so this path carries no time-stepping error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .core import CoefficientField, FieldSolution, ProblemConfig, SpatialGrid, TimeGrid, make_time_grid
from .exceptions import SolverFailure
from .mittag_leffler import ml_decay_table

__all__ = ["EigenSystem", "eigendecompose", "spectral_solve", "projection_residual"]


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    # columns are eigenvectors on all grid nodes (zero at x=ell for Dirichlet)
    eigenvectors: np.ndarray
    weights: np.ndarray
    grid: SpatialGrid
    right_bc: str

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def inner(self, f, g) -> np.ndarray:
        return (self.weights * f) @ g

    def coefficients(self, a) -> np.ndarray:
        samples = a.samples if isinstance(a, CoefficientField) else np.asarray(a, dtype=float)
        return (self.weights * samples) @ self.eigenvectors


def _weights(grid: SpatialGrid, right_bc: str) -> np.ndarray:
    w = np.full(grid.n_nodes, grid.h)
    w[0] = 0.5 * grid.h
    if right_bc == "neumann":
        w[-1] = 0.5 * grid.h
    else:
        w[-1] = 0.0
    return w


def eigendecompose(
    p: CoefficientField, right_bc: str = "neumann", n_modes: Optional[int] = None
) -> EigenSystem:
    """Lowest ``n_modes`` eigenpairs of ``-d^2/dx^2 + p`` on ``p.grid``.

    Neumann at ``x = 0``; ``right_bc`` selects homogeneous Neumann or
    Dirichlet at ``x = ell``. The default mode count is ``N // 4``.
    """
    grid = p.grid
    N = grid.n_cells
    if n_modes is None:
        n_modes = max(N // 4, 1)
    if not 1 <= n_modes <= N - 1:
        raise ValueError(f"n_modes must lie in 1..{N - 1}, got {n_modes}")
    if right_bc not in ("neumann", "dirichlet"):
        raise ValueError(f"unknown right_bc {right_bc!r}")
    h = grid.h
    inv_h2 = 1.0 / (h * h)
    n = grid.n_nodes if right_bc == "neumann" else grid.n_nodes - 1
    w = _weights(grid, right_bc)[:n]
    diag = 2.0 * inv_h2 + p.samples[:n]
    # off-diagonal of W^(1/2) A W^(-1/2); ghost-node rows pick up sqrt(2)
    off = -inv_h2 * np.ones(n - 1)
    off[0] = -inv_h2 * np.sqrt(2.0)
    if right_bc == "neumann":
        off[-1] = -inv_h2 * np.sqrt(2.0)
    try:
        lam, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_modes - 1))
    except LinAlgError as exc:
        raise SolverFailure(f"tridiagonal eigensolver did not converge: {exc}") from exc
    phi = np.zeros((grid.n_nodes, n_modes))
    phi[:n] = vec / np.sqrt(w)[:, None]
    # fix signs so phi(0) > 0 (or its first nonzero entry)
    sgn = np.sign(phi[0])
    sgn[sgn == 0] = 1.0
    phi *= sgn
    return EigenSystem(lam, phi, _weights(grid, right_bc), grid, right_bc)


def projection_residual(eig: EigenSystem, a: CoefficientField) -> float:
    """Weighted L2 norm of ``a`` minus its truncated eigen-expansion."""
    c = eig.coefficients(a)
    r = a.samples - eig.eigenvectors @ c
    if eig.right_bc == "dirichlet":
        r[-1] = 0.0
    return float(np.sqrt(eig.inner(r, r)))


def spectral_solve(
    eig: EigenSystem,
    a: CoefficientField,
    alpha: float,
    times,
    config: Optional[ProblemConfig] = None,
) -> FieldSolution:
    """Synthesize ``u = sum_n <a, phi_n> E_alpha(-lambda_n t**alpha) phi_n``.

    ``times`` is a :class:`TimeGrid` or a step count on ``[0, config.horizon]``.
    """
    if a.grid.n_nodes != eig.grid.n_nodes:
        raise ValueError("initial value and eigensystem live on different grids")
    lam = eig.eigenvalues
    # roundoff can push a zero eigenvalue (p = 0, Neumann) slightly negative
    floor = 1e-10 * max(1.0, float(np.abs(lam).max()))
    if np.any(lam < -floor):
        raise ValueError("negative eigenvalues are not supported; shift the potential")
    if config is None:
        horizon = times.horizon if isinstance(times, TimeGrid) else 1.0
        config = ProblemConfig(alpha=alpha, ell=eig.grid.ell, horizon=horizon, right_bc=eig.right_bc)
    tgrid = times if isinstance(times, TimeGrid) else make_time_grid(config.horizon, times)
    coef = eig.coefficients(a)
    decay = ml_decay_table(alpha, np.maximum(lam, 0.0), tgrid)
    values = eig.eigenvectors @ (coef[:, None] * decay)
    meta = {"scheme": "spectral", "n_modes": eig.n_modes}
    return FieldSolution(values, config, eig.grid, tgrid, meta)
