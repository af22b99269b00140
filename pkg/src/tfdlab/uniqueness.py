"""Numerical experiments around one-endpoint uniqueness.

Each experiment returns an :class:`ExperimentReport` whose metrics carry
their thresholds and outcomes, so runs can be serialised and compared.

The checks follow the chain of the uniqueness argument:

* different potentials produce different lateral traces at ``x = 0``
  (``distinguishability``);
* if ``p = q`` on ``[0, x0]`` the kernel vanishes on the sub-triangle
  above ``[0, x0]``, and ``K(x, 0) = 0`` up to ``min(2 x0, ell)``
  (``kernel_vanishing_check``);
* the kernel moment ``M(x) = int_0^x K(x, y) a(y) dy`` obeys

      M''(x) = (q - p)(x) a(x) + K(x, 0) a'(0)
               + int_0^x (q(x) - p(y)) K(x, y) a(y) dy + int_0^x K(x, y) a''(y) dy

  (``moment_identity``), which, when ``M`` vanishes, expresses ``p - q``
  through integrals of ``K`` and closes a contraction on short intervals
  (``contraction_probe``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import CoefficientField, ProblemConfig, boundary_derivative, make_uniform_grid, trapezoid
from .exceptions import PreconditionViolation
from .forward_l1 import solve_ibvp
from .goursat import TransmutationKernel, solve_kernel
from .spectral import eigendecompose, spectral_solve
from .transmutation import transform_matrix

__all__ = [
    "Metric",
    "ExperimentReport",
    "check_initial_value",
    "trace_gap",
    "cross_solver_floor",
    "distinguishability",
    "kernel_vanishing_check",
    "moment_identity_terms",
    "moment_identity",
    "moment_identity_study",
    "contraction_probe",
]

_RELATIONS = {
    "<=": lambda v, t: v <= t,
    "<": lambda v, t: v < t,
    ">": lambda v, t: v > t,
    ">=": lambda v, t: v >= t,
}


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    threshold: Optional[float] = None
    relation: str = "<="

    @property
    def passed(self) -> Optional[bool]:
        if self.threshold is None:
            return None
        return bool(_RELATIONS[self.relation](self.value, self.threshold))

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "relation": self.relation, "passed": self.passed}


@dataclass
class ExperimentReport:
    scenario: str
    config: dict = field(default_factory=dict)
    metrics: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    def add(self, name, value, threshold=None, relation="<=") -> Metric:
        m = Metric(name, float(value), None if threshold is None else float(threshold), relation)
        self.metrics.append(m)
        return m

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(m.passed is not False for m in self.metrics)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "config": self.config,
            "metrics": [m.to_dict() for m in self.metrics],
            "notes": list(self.notes),
            "passed": self.passed,
        }

    def to_text(self) -> str:
        rows = [("metric", "value", "threshold", "outcome")]
        for m in self.metrics:
            thr = "" if m.threshold is None else f"{m.relation} {m.threshold:.3e}"
            out = {True: "PASS", False: "FAIL", None: "info"}[m.passed]
            rows.append((m.name, f"{m.value:.6e}", thr, out))
        widths = [max(len(r[k]) for r in rows) for k in range(4)]
        lines = [f"scenario: {self.scenario}"]
        lines += ["  " + "  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        lines += [f"  note: {n}" for n in self.notes]
        lines.append(f"  overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def check_initial_value(a: CoefficientField, rel_floor: float = 1e-6) -> None:
    """Reject initial values that (nearly) vanish somewhere on the grid."""
    mag = np.abs(a.samples)
    if mag.max() == 0 or mag.min() < rel_floor * mag.max():
        raise PreconditionViolation(
            f"initial value must stay away from zero: min|a| = {mag.min():.3e}, "
            f"max|a| = {mag.max():.3e} (need ratio >= {rel_floor:g})"
        )


def trace_gap(u0, v0, dt: float) -> float:
    """``L2(0, T)`` norm of the difference of two sampled traces."""
    d = np.asarray(u0) - np.asarray(v0)
    return float(np.sqrt(trapezoid(d * d, dt)))


def cross_solver_floor(config: ProblemConfig, p: CoefficientField, a: CoefficientField, n_steps: int,
                       n_modes: Optional[int] = None):
    """L1 solution and the ``L2(0, T)`` gap between its trace and the spectral one."""
    u = solve_ibvp(config, p, a, n_steps)
    eig = eigendecompose(p, config.right_bc, n_modes)
    s = spectral_solve(eig, a, config.alpha, u.tgrid, config)
    return u, trace_gap(u.values[0], s.values[0], u.tgrid.dt)


def _same(p: CoefficientField, q: CoefficientField) -> bool:
    return np.array_equal(p.samples, q.samples)


def distinguishability(
    p: CoefficientField,
    q: CoefficientField,
    a: CoefficientField,
    config: ProblemConfig,
    n_steps: int,
    factor: float = 100.0,
    scenario: str = "distinguishability",
) -> ExperimentReport:
    """Compare the traces ``u(0, t)`` produced by ``p`` and ``q``.

    Both problems carry zero flux at ``x = 0``. The noise floor is the
    larger L1-vs-spectral trace discrepancy of the two solves. Distinct
    potentials pass when the gap exceeds ``factor`` times the floor; equal
    ones pass when the gap stays below the floor.
    """
    check_initial_value(a)
    if config.right_value is not None:
        raise ValueError("the spectral noise floor needs a homogeneous condition at x = ell")
    u, floor_p = cross_solver_floor(config, p, a, n_steps)
    if _same(p, q):
        ut, floor_q = u, floor_p
    else:
        ut, floor_q = cross_solver_floor(config, q, a, n_steps)
    gap = trace_gap(u.values[0], ut.values[0], u.tgrid.dt)
    floor = max(floor_p, floor_q)

    rep = ExperimentReport(scenario, dict(config.echo(), N=p.grid.n_cells, M=u.tgrid.n_steps, factor=factor))
    rep.add("noise_floor", floor)
    if _same(p, q):
        rep.add("trace_gap", gap, floor, "<=")
        rep.notes.append("p = q: identical discrete systems")
    else:
        rep.add("trace_gap", gap, factor * floor, ">")
        rep.add("gap_over_floor", gap / floor if floor > 0 else np.inf)
    rep.curves = {"t": u.tgrid.nodes, "u0_p": u.values[0], "u0_q": ut.values[0]}
    return rep


def kernel_vanishing_check(
    p: CoefficientField,
    q: CoefficientField,
    x0: float,
    tol: float = 1e-10,
    eps0: Optional[float] = None,
    boundary_tol: float = 1e-8,
    min_global: Optional[float] = None,
    kernel: Optional[TransmutationKernel] = None,
) -> ExperimentReport:
    """Kernel size on the sub-triangle over ``[0, x0]`` where ``p = q``.

    With ``eps0`` set, also checks ``K(x, 0) = 0`` for
    ``x <= min(2 eps0, ell)``; ``min_global`` asserts that the kernel is
    genuinely nonzero elsewhere.
    """
    grid = p.grid
    i0 = grid.index_of(x0)
    diff = np.abs(q.samples[: i0 + 1] - p.samples[: i0 + 1]).max()
    if diff > 0:
        raise PreconditionViolation(f"p and q differ by {diff:.3e} on [0, {x0}]")
    K = kernel if kernel is not None else solve_kernel(p, q, tol=min(tol, 1e-12))
    rep = ExperimentReport("kernel_vanishing", {"x0": x0, "ell": grid.ell, "N": grid.n_cells, "tol": tol})
    rep.add("max_K_subtriangle", K.sup_on_subtriangle(i0), tol, "<=")
    rep.add("max_K_global", np.abs(K.lower()).max(), min_global, ">")
    rep.add("picard_iterations", K.iterations)
    if eps0 is not None:
        reach = min(2.0 * eps0, grid.ell)
        ib = grid.index_of(reach)
        rep.config.update(eps0=eps0, reach=reach)
        rep.add("max_K_x0_column", np.abs(K.boundary_column[: ib + 1]).max(), boundary_tol, "<=")
    rep.curves = {"x": grid.nodes, "K_diag": K.diagonal, "K_x0": K.boundary_column}
    return rep


def _second_derivative(f: np.ndarray, h: float) -> np.ndarray:
    d2 = np.empty_like(f)
    d2[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    d2[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return d2


def moment_identity_terms(K: TransmutationKernel, a: CoefficientField) -> dict:
    """All pieces of the differentiated moment identity on the grid.

    Derivatives of ``a`` come from finite differences of its samples.
    Entries 0 and N of the centred ``M''`` are NaN.
    """
    p, q = K.p, K.q
    h = K.grid.h
    av = a.samples
    T = transform_matrix(K)
    moment = T @ av
    m2 = np.full_like(moment, np.nan)
    m2[1:-1] = (moment[2:] - 2.0 * moment[1:-1] + moment[:-2]) / h**2
    a1_0 = boundary_derivative(av, h)
    a2 = _second_derivative(av, h)
    potential = q.samples * moment - T @ (p.samples * av)
    curvature = T @ a2
    boundary = K.boundary_column * a1_0
    jump = (q.samples - p.samples) * av
    rhs = jump + boundary + potential + curvature
    return {
        "moment": moment,
        "moment_dd": m2,
        "rhs": rhs,
        "jump": jump,
        "boundary": boundary,
        "potential": potential,
        "curvature": curvature,
        # division form: p - q predicted from the integral terms alone
        "p_minus_q_pred": (potential + curvature + boundary) / av,
    }


def moment_identity(p: CoefficientField, q: CoefficientField, a: CoefficientField,
                    kernel: Optional[TransmutationKernel] = None) -> ExperimentReport:
    """Node-wise discrepancy of the differentiated moment identity.

    The identity is checked in the division-free form; the division form
    is kept as a diagnostic curve.
    """
    check_initial_value(a)
    K = kernel if kernel is not None else solve_kernel(p, q)
    terms = moment_identity_terms(K, a)
    disc = np.abs(terms["moment_dd"][1:-1] - terms["rhs"][1:-1])
    rep = ExperimentReport("moment_identity", {"N": p.grid.n_cells, "ell": p.grid.ell})
    rep.add("max_discrepancy", disc.max())
    rep.add("max_boundary_term", np.abs(terms["boundary"]).max())
    rep.curves = {"x": p.grid.nodes, **terms, "p_minus_q": p.samples - q.samples}
    return rep


def moment_identity_study(
    p_fn: Callable, q_fn: Callable, a_fn: Callable, ell: float = 1.0, n_cells: Sequence[int] = (50, 100, 200),
) -> dict:
    """Discrepancy of the moment identity on successively halved grids.

    Returns the discrepancies, the pairwise observed orders and the
    least-squares order fitted on ``log(error)`` against ``log(h)``.
    """
    hs, errs = [], []
    for n in n_cells:
        grid = make_uniform_grid(ell, n)
        rep = moment_identity(
            CoefficientField.from_function(p_fn, grid, "p"),
            CoefficientField.from_function(q_fn, grid, "q"),
            CoefficientField.from_function(a_fn, grid, "a"),
        )
        hs.append(grid.h)
        errs.append(rep.metric("max_discrepancy").value)
    hs, errs = np.array(hs), np.array(errs)
    orders = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
    fitted = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return {"h": hs, "errors": errs, "orders": orders, "fitted_order": fitted}


def contraction_probe(
    p: CoefficientField,
    q: CoefficientField,
    a: CoefficientField,
    x_samples: Optional[Sequence[float]] = None,
    slope_tol: float = 0.3,
) -> ExperimentReport:
    """Ratio of the integral terms to ``||p - q||_{C[0, x]}`` on shrinking intervals.

    ``rho(x) = sup_{[0, x]} |R / a| / ||p - q||_{C[0, x]}`` where ``R`` is the
    right side of the moment identity without the ``(q - p) a`` term. The
    uniqueness argument needs ``rho(x) <= C x``; the report fits the
    log-log slope of ``rho`` and passes when it is at least
    ``1 - slope_tol``.
    """
    check_initial_value(a)
    if abs(p.samples[0] - q.samples[0]) > 1e-12:
        raise PreconditionViolation("contraction probe expects p(0) = q(0)")
    grid = p.grid
    if x_samples is None:
        x_samples = grid.ell * 0.5 ** np.arange(1, 6)
    K = solve_kernel(p, q)
    terms = moment_identity_terms(K, a)
    integral_part = np.abs((terms["potential"] + terms["curvature"] + terms["boundary"]) / a.samples)
    diff = np.abs(p.samples - q.samples)

    xs, rho = [], []
    for x in x_samples:
        i = grid.index_of(x)
        dn = diff[: i + 1].max()
        if i < 1 or dn == 0.0:
            continue
        xs.append(grid.nodes[i])
        rho.append(integral_part[: i + 1].max() / dn)
    rep = ExperimentReport("contraction", {"N": grid.n_cells, "slope_tol": slope_tol})
    if len(xs) < 2:
        rep.notes.append("vacuous: p - q vanishes on every sampled interval")
        return rep
    xs, rho = np.array(xs), np.array(rho)
    slope = float(np.polyfit(np.log(xs), np.log(rho), 1)[0])
    rep.add("fitted_slope", slope, 1.0 - slope_tol, ">=")
    rep.add("rho_max", rho.max())
    rep.curves = {"x": xs, "rho": rho}
    return rep
