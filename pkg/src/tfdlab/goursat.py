"""Transformation kernel ``K(x, y)`` on the triangle ``0 <= y <= x <= ell``.

``K`` solves

    K_xx - K_yy = (q(x) - p(y)) K,   K_y(x, 0) = 0,   K(x, x) = (1/2) int_0^x (q - p).

The Neumann condition is absorbed by extending ``K`` and ``p`` evenly to
``y < 0``. In characteristic variables ``xi = x + y``, ``eta = x - y`` the
extended problem is a Goursat problem on ``xi, eta >= 0``:

    W(xi, eta) = G(xi/2) + G(eta/2) + (1/4) int_0^xi int_0^eta c W,
    c(xi, eta) = q((xi+eta)/2) - p(|xi-eta|/2),  G(s) = (1/2) int_0^s (q - p),

which is solved by successive approximation with the two-dimensional
cumulative trapezoid rule on a lattice of spacing ``h`` in both variables.
Lattice points with odd ``a + b`` sit at half-cell positions in ``x``; the
coefficients are evaluated there through :meth:`CoefficientField.evaluate`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core import CoefficientField, SpatialGrid
from .exceptions import ConvergenceError

__all__ = [
    "TransmutationKernel",
    "solve_kernel",
    "kernel_linearization",
    "kernel_pde_residual",
    "kernel_norm_probe",
    "diagonal_integral",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


def field_hash(f: CoefficientField) -> str:
    return hashlib.sha256(np.ascontiguousarray(f.samples).tobytes()).hexdigest()[:12]


@dataclass(frozen=True)
class TransmutationKernel:
    """Kernel samples ``values[i, j] = K(x_i, y_j)`` for ``j <= i``.

    Entries above the diagonal are NaN; use :meth:`at` for checked access
    or :meth:`lower` for a zero-filled copy.
    """

    values: np.ndarray
    grid: SpatialGrid
    p: CoefficientField = field(repr=False)
    q: CoefficientField = field(repr=False)
    iterations: int = 0
    update_norms: tuple = ()
    # sup over the lattice of |W(xi, eta) - W(eta, xi)|: defect of the even extension
    reflection_defect: float = 0.0

    @property
    def final_update(self) -> float:
        return self.update_norms[-1] if self.update_norms else 0.0

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).copy()

    @property
    def boundary_column(self) -> np.ndarray:
        """``K(x_i, 0)``."""
        return self.values[:, 0].copy()

    def at(self, i: int, j: int) -> float:
        if not (0 <= j <= i <= self.grid.n_cells):
            raise IndexError(f"({i}, {j}) is outside the triangle 0 <= j <= i <= {self.grid.n_cells}")
        return float(self.values[i, j])

    def lower(self) -> np.ndarray:
        return np.nan_to_num(self.values, nan=0.0)

    def sup_on_subtriangle(self, i_max: int) -> float:
        """``max |K|`` over nodes with ``x_i <= x_{i_max}``."""
        block = self.lower()[: i_max + 1, : i_max + 1]
        return float(np.abs(block).max())

    def diagnostics(self) -> dict:
        return {
            "p_sha": field_hash(self.p),
            "q_sha": field_hash(self.q),
            "iterations": self.iterations,
            "final_update": self.final_update,
            "reflection_defect": self.reflection_defect,
        }


def diagonal_integral(p: CoefficientField, q: CoefficientField) -> np.ndarray:
    """``G(s_m) = (1/2) int_0^{s_m} (q - p)`` at half-cell points ``s_m = m h/2``.

    Three-point Gauss-Legendre per half cell: exact for the local cubic
    interpolant of sampled fields, sixth order for function-backed ones.
    """
    h = p.grid.h
    n_half = 2 * p.grid.n_cells
    left = np.arange(n_half) * (0.5 * h)
    pts = left[:, None] + 0.25 * h * (_GL_NODES[None, :] + 1.0)
    r = q.evaluate(pts) - p.evaluate(pts)
    cell = 0.25 * h * (r @ _GL_WEIGHTS)
    return 0.5 * np.concatenate([[0.0], np.cumsum(cell)])


def _lattice_coefficient(p_half: np.ndarray, q_half: np.ndarray, n: int) -> np.ndarray:
    a = np.arange(2 * n + 1)
    A, B = np.meshgrid(a, a, indexing="ij")
    inside = A + B <= 2 * n
    c = np.zeros(A.shape)
    c[inside] = q_half[(A + B)[inside]] - p_half[np.abs(A - B)[inside]]
    return c, inside


def _picard(c, boundary, inside, h, tol, max_iter):
    W = boundary.copy()
    norms = []
    for it in range(1, max_iter + 1):
        F = c * W
        I = cumulative_trapezoid(F, dx=h, axis=0, initial=0.0)
        I = cumulative_trapezoid(I, dx=h, axis=1, initial=0.0)
        W_new = boundary + 0.25 * I
        W_new[~inside] = 0.0
        upd = float(np.abs(W_new - W).max())
        norms.append(upd)
        W = W_new
        if upd <= tol:
            return W, it, norms
    raise ConvergenceError(
        f"Picard iteration stalled after {max_iter} sweeps (last update {norms[-1]:.3e} > tol {tol:.1e})",
        last_update=norms[-1],
        iterations=max_iter,
    )


def _to_triangle(W: np.ndarray, n: int) -> np.ndarray:
    i, j = np.tril_indices(n + 1)
    K = np.full((n + 1, n + 1), np.nan)
    K[i, j] = W[i + j, i - j]
    return K


def _half_samples(f: CoefficientField) -> np.ndarray:
    return f.evaluate(np.arange(2 * f.grid.n_cells + 1) * (0.5 * f.grid.h))


def solve_kernel(
    p: CoefficientField,
    q: CoefficientField,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> TransmutationKernel:
    """Kernel of the transformation taking ``p``-solutions to ``q``-solutions.

    Raises :class:`ConvergenceError` if the successive approximations do
    not settle to ``tol`` (sup norm of the update) within ``max_iter``.
    """
    if p.grid.n_nodes != q.grid.n_nodes or p.grid.ell != q.grid.ell:
        raise ValueError("p and q must share a grid")
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = p.grid
    n, h = grid.n_cells, grid.h
    G = diagonal_integral(p, q)
    c, inside = _lattice_coefficient(_half_samples(p), _half_samples(q), n)
    boundary = G[:, None] + G[None, :]
    boundary[~inside] = 0.0
    W, its, norms = _picard(c, boundary, inside, h, tol, max_iter)
    defect = float(np.abs(W - W.T).max())
    return TransmutationKernel(_to_triangle(W, n), grid, p, q, its, tuple(norms), defect)


def kernel_linearization(p: CoefficientField, r: CoefficientField, tol: float = 1e-12, max_iter: int = 100):
    """``d/ds`` at ``s = 0`` of the kernel for the pair ``(p, p + s r)``.

    Same Goursat problem with ``c = p(x) - p(|y|)`` and diagonal data from ``r``.
    """
    grid = p.grid
    n, h = grid.n_cells, grid.h
    zero = CoefficientField(np.zeros(grid.n_nodes), grid, "p", lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    G = diagonal_integral(zero, r)
    ph = _half_samples(p)
    c, inside = _lattice_coefficient(ph, ph, n)
    boundary = G[:, None] + G[None, :]
    boundary[~inside] = 0.0
    W, its, norms = _picard(c, boundary, inside, h, tol, max_iter)
    return TransmutationKernel(_to_triangle(W, n), grid, p, p + r, its, tuple(norms), float(np.abs(W - W.T).max()))


def kernel_pde_residual(K: TransmutationKernel, p: CoefficientField = None, q: CoefficientField = None) -> float:
    """Max of ``|D2x K - D2y K - (q(x) - p(y)) K|`` over nodes at least two
    cells away from every side of the triangle."""
    p = K.p if p is None else p
    q = K.q if q is None else q
    n, h = K.grid.n_cells, K.grid.h
    V = K.lower()
    i, j = np.tril_indices(n + 1)
    keep = (j >= 2) & (i - j >= 2) & (i <= n - 2)
    i, j = i[keep], j[keep]
    if i.size == 0:
        return 0.0
    dxx = (V[i + 1, j] - 2 * V[i, j] + V[i - 1, j]) / h**2
    dyy = (V[i, j + 1] - 2 * V[i, j] + V[i, j - 1]) / h**2
    res = dxx - dyy - (q.samples[i] - p.samples[j]) * V[i, j]
    return float(np.abs(res).max())


def kernel_norm_probe(
    pairs: Sequence[tuple[CoefficientField, CoefficientField]],
    x_samples: Optional[Iterable[float]] = None,
    tol: float = 1e-12,
) -> dict:
    """Empirical constant in ``sup_{Omega_x} |K| <= C ||p - q||_{C[0, x]}``.

    For each pair and each sample point ``x`` the ratio of the kernel's sup
    over the sub-triangle to the sup of ``|p - q|`` on ``[0, x]``; pairs
    whose difference vanishes on ``[0, x]`` contribute ratio 0.
    """
    rows = []
    max_ratio = 0.0
    for p, q in pairs:
        grid = p.grid
        if x_samples is None:
            idx = np.unique(np.linspace(1, grid.n_cells, 10).round().astype(int))
        else:
            idx = np.array([grid.index_of(x) for x in x_samples])
        K = solve_kernel(p, q, tol=tol)
        absK = np.abs(K.lower())
        diff = np.abs(q.samples - p.samples)
        sup_k = np.array([absK[: i + 1, : i + 1].max() for i in idx])
        sup_d = np.array([diff[: i + 1].max() for i in idx])
        ratio = np.divide(sup_k, sup_d, out=np.zeros_like(sup_k), where=sup_d > 0)
        max_ratio = max(max_ratio, float(ratio.max(initial=0.0)))
        rows.append({"x": grid.nodes[idx], "sup_K": sup_k, "sup_diff": sup_d, "ratio": ratio})
    return {"pairs": rows, "max_ratio": max_ratio}
