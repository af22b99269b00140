"""Apply the Volterra transformation ``v = u + int_0^x K(x, y) u(y) dy``.

If ``u`` solves the ``p``-equation and ``K`` is the kernel for ``(p, q)``,
then ``v`` solves the ``q``-equation up to the lateral source term
``-K(x, 0) u_x(0, t)``, and ``v`` shares the Cauchy data of ``u`` at
``x = 0``. The residual helpers here measure that identity on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CauchyTrace, CoefficientField, FieldSolution, cumulative_trapezoid_weights
from .forward_l1 import caputo_l1
from .goursat import TransmutationKernel

__all__ = [
    "TransformedField",
    "apply_transform",
    "transform_matrix",
    "transformed_equation_residual",
]


@dataclass(frozen=True)
class TransformedField:
    values: np.ndarray
    source: FieldSolution = field(repr=False)
    kernel: TransmutationKernel = field(repr=False)

    def as_solution(self) -> FieldSolution:
        return FieldSolution(self.values, self.source.config, self.source.xgrid, self.source.tgrid,
                             {"scheme": "transformed"})


def transform_matrix(K: TransmutationKernel) -> np.ndarray:
    """Matrix ``T`` with ``(T f)_i = trapezoid of K(x_i, .) f(.) over [0, x_i]``."""
    W = cumulative_trapezoid_weights(K.grid.n_nodes, K.grid.h)
    return W * K.lower()


def apply_transform(u: FieldSolution, K: TransmutationKernel) -> TransformedField:
    if u.xgrid.n_nodes != K.grid.n_nodes or u.xgrid.ell != K.grid.ell:
        raise ValueError("solution and kernel are sampled on different spatial grids")
    v = u.values + transform_matrix(K) @ u.values
    return TransformedField(v, u, K)


def transformed_equation_residual(
    v: TransformedField,
    q: CoefficientField,
    u_trace: CauchyTrace,
    K: TransmutationKernel = None,
    alpha: float = None,
    include_boundary_term: bool = True,
    return_field: bool = False,
):
    """Sup of ``|L1(v) - D2 v + q v + K(x, 0) u_x(0, t)|``.

    Taken over interior nodes ``1 <= i <= N-1`` and times ``t >= 2 dt``; the
    time derivative uses the same L1 weights as the forward solver.
    ``include_boundary_term=False`` drops the lateral source term (ablation).
    """
    K = v.kernel if K is None else K
    src = v.source
    alpha = src.config.alpha if alpha is None else alpha
    h = src.xgrid.h
    dt = src.tgrid.dt
    V = v.values
    cap = caputo_l1(V, alpha, dt)
    d2 = (V[2:] - 2.0 * V[1:-1] + V[:-2]) / h**2
    res = cap[1:-1] - d2 + q.samples[1:-1, None] * V[1:-1]
    if include_boundary_term:
        res = res + np.outer(K.boundary_column[1:-1], u_trace.du0)
    res = res[:, 2:]
    sup = float(np.abs(res).max())
    if return_field:
        return sup, res
    return sup
