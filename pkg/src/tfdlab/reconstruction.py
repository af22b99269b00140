"""Recover ``p(x)`` from the lateral trace ``u(0, t)`` by output least squares.

The unknown is a short vector of nodal values on a coarse uniform grid,
interpolated to the solver grid by a cubic spline. The misfit

    J(p) = sum_j (u_p(0, t_j) - d_j)**2 dt + lam * sum_k (p_{k+1} - p_k)**2 / dz

is minimised by BFGS with central finite-difference gradients and an
Armijo backtracking line search. Synthetic data are generated on a grid
twice as fine in space and time as the inversion grid.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .core import (
    CoefficientField,
    ProblemConfig,
    SpatialGrid,
    TimeGrid,
    make_time_grid,
    make_uniform_grid,
    trapezoid,
)
from .exceptions import PreconditionViolation, SolverFailure
from .io import read_csv, write_csv, write_json
from .forward_l1 import solve_ibvp
from .uniqueness import check_initial_value

__all__ = [
    "InverseProblemInstance",
    "OptimizerConfig",
    "ReconstructionResult",
    "synthesize_data",
    "coarse_to_fine",
    "objective",
    "fd_gradient",
    "reconstruct",
    "discrepancy_principle",
    "relative_l2_error",
    "gradient_step_check",
    "save_instance",
    "load_instance",
    "save_result",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InverseProblemInstance:
    config: ProblemConfig
    xgrid: SpatialGrid
    tgrid: TimeGrid
    a: CoefficientField
    observed: np.ndarray
    n_params: int
    sigma: float = 0.0
    lambda_reg: float = 0.0
    seed: Optional[int] = None
    clean: Optional[np.ndarray] = None
    p_true: Optional[CoefficientField] = None

    def __post_init__(self):
        if len(self.observed) != self.tgrid.n_steps + 1:
            raise ValueError("observed trace length does not match the time grid")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 2 <= self.n_params <= 20:
            raise ValueError("n_params must lie in 2..20")

    @property
    def param_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.xgrid.ell, self.n_params)

    def with_lambda(self, lam: float) -> "InverseProblemInstance":
        return replace(self, lambda_reg=float(lam))

    def noise_norm(self) -> float:
        """``L2(0, T)`` size of the noise, ``sigma * ||d_clean||`` (observed
        data stand in when no clean trace is attached)."""
        ref = self.observed if self.clean is None else self.clean
        return self.sigma * _l2(ref, self.tgrid.dt)


def _l2(v, dt) -> float:
    return float(np.sqrt(np.sum(np.asarray(v)[1:] ** 2) * dt))


def synthesize_data(
    p_true: Callable,
    a: Callable,
    config: ProblemConfig,
    n_cells: int,
    n_steps: int,
    sigma: float = 0.0,
    rng_seed: Optional[int] = 0,
    n_params: int = 10,
    lambda_reg: float = 0.0,
    refine: int = 2,
) -> InverseProblemInstance:
    """Synthetic trace from a solve ``refine`` times finer in ``x`` and ``t``.

    The noise direction is a seeded standard Gaussian vector, rescaled so
    that its discrete ``L2(0, T)`` norm is exactly ``sigma * ||d_clean||``.
    """
    fine_x = make_uniform_grid(config.ell, refine * n_cells)
    a_fine = CoefficientField.from_function(a, fine_x, "a")
    check_initial_value(a_fine)
    sol = solve_ibvp(config, CoefficientField.from_function(p_true, fine_x, "p"), a_fine, refine * n_steps)
    clean = sol.values[0, ::refine].copy()
    dt = config.horizon / n_steps
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(clean.size)
    noise[0] = 0.0
    observed = clean + sigma * _l2(clean, dt) * noise / _l2(noise, dt)
    xgrid = make_uniform_grid(config.ell, n_cells)
    return InverseProblemInstance(
        config=config,
        xgrid=xgrid,
        tgrid=make_time_grid(config.horizon, n_steps),
        a=CoefficientField.from_function(a, xgrid, "a"),
        observed=observed,
        n_params=n_params,
        sigma=sigma,
        lambda_reg=lambda_reg,
        seed=rng_seed,
        clean=clean,
        p_true=CoefficientField.from_function(p_true, xgrid, "p"),
    )


def coarse_to_fine(params, instance: InverseProblemInstance) -> CoefficientField:
    params = np.asarray(params, dtype=float)
    spline = CubicSpline(instance.param_nodes, params)
    return CoefficientField(spline(instance.xgrid.nodes), instance.xgrid, "p", spline)


def predicted_trace(params, instance: InverseProblemInstance) -> np.ndarray:
    sol = solve_ibvp(instance.config, coarse_to_fine(params, instance), instance.a, instance.tgrid)
    return sol.values[0]


def objective(params, instance: InverseProblemInstance, return_parts: bool = False):
    """Data misfit plus ``lambda_reg`` times the discrete H1 seminorm squared."""
    params = np.asarray(params, dtype=float)
    r = predicted_trace(params, instance) - instance.observed
    data = float(np.sum(r[1:] ** 2) * instance.tgrid.dt)
    dz = instance.xgrid.ell / (instance.n_params - 1)
    reg = float(np.sum(np.diff(params) ** 2) / dz)
    J = data + instance.lambda_reg * reg
    if return_parts:
        return J, {"data": data, "reg": reg, "residual_norm": float(np.sqrt(data))}
    return J


def fd_gradient(fun: Callable, params, rel_step: float = 1e-4) -> np.ndarray:
    """Central differences with step ``rel_step * max(|p_k|, 1)`` per component."""
    params = np.asarray(params, dtype=float)
    g = np.empty_like(params)
    for k in range(params.size):
        step = rel_step * max(abs(params[k]), 1.0)
        e = np.zeros_like(params)
        e[k] = step
        g[k] = (fun(params + e) - fun(params - e)) / (2.0 * step)
    return g


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 200
    gtol: float = 1e-8
    # relative objective decrease below which the run counts as stalled-converged
    ftol: float = 1e-12
    fd_step: float = 1e-4
    armijo: float = 1e-4
    max_halvings: int = 40
    initial_step: float = 0.5


@dataclass
class ReconstructionResult:
    params: np.ndarray
    p_estimate: CoefficientField
    objective_log: list = field(default_factory=list)
    grad_norm_log: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    degraded: bool = False
    message: str = ""


def reconstruct(
    instance: InverseProblemInstance,
    optimizer: OptimizerConfig = OptimizerConfig(),
    p0=None,
) -> ReconstructionResult:
    """Minimise :func:`objective` from ``p0`` (default: zeros).

    A failed line search ends the run with ``degraded=True`` and the best
    iterate so far; forward-solve failures during trial steps count as
    rejected steps.
    """
    fun = lambda x: objective(x, instance)
    x = np.zeros(instance.n_params) if p0 is None else np.array(p0, dtype=float)
    J = fun(x)
    g = fd_gradient(fun, x, optimizer.fd_step)
    Jlog, glog = [J], [float(np.linalg.norm(g))]
    H = None
    converged, degraded, msg = False, False, "iteration budget exhausted"
    it = 0
    for it in range(1, optimizer.max_iter + 1):
        gn = np.linalg.norm(g)
        if gn <= optimizer.gtol:
            converged, msg, it = True, "gradient tolerance reached", it - 1
            break
        if H is None:
            d = -g * (optimizer.initial_step * max(1.0, np.linalg.norm(x)) / gn)
        else:
            d = -H @ g
            if g @ d >= 0:  # lost descent; restart from steepest descent
                H = None
                d = -g * (optimizer.initial_step * max(1.0, np.linalg.norm(x)) / gn)
        slope = float(g @ d)
        t = 1.0
        for _ in range(optimizer.max_halvings):
            try:
                J_try = fun(x + t * d)
            except SolverFailure:
                J_try = np.inf
            if J_try <= J + optimizer.armijo * t * slope and J_try < J:
                break
            t *= 0.5
        else:
            degraded, msg, it = True, "line search failed", it - 1
            break
        x_new = x + t * d
        g_new = fd_gradient(fun, x_new, optimizer.fd_step)
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            if H is None:
                H = (sy / float(y @ y)) * np.eye(x.size)
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        dJ = J - J_try
        x, g, J = x_new, g_new, J_try
        Jlog.append(J)
        glog.append(float(np.linalg.norm(g)))
        log.debug("iter %d  J=%.6e  |g|=%.3e  step=%.3g", it, J, glog[-1], t)
        if dJ <= optimizer.ftol * max(J, 1e-300):
            converged, msg = True, "objective decrease below ftol"
            break
    else:
        it = optimizer.max_iter
    return ReconstructionResult(
        params=x,
        p_estimate=coarse_to_fine(x, instance),
        objective_log=Jlog,
        grad_norm_log=glog,
        iterations=it,
        converged=converged,
        degraded=degraded,
        message=msg,
    )


def gradient_step_check(instance: InverseProblemInstance, params, rel_step: float = 1e-4) -> dict:
    """Compare FD gradients at ``rel_step`` and ``rel_step / 2``.

    ``relative_difference`` is ``||g_h - g_{h/2}|| / ||g_{h/2}||``;
    ``max_component_difference`` is the worst componentwise relative gap
    over components carrying at least 1e-3 of the gradient norm.
    """
    fun = lambda x: objective(x, instance)
    g1 = fd_gradient(fun, params, rel_step)
    g2 = fd_gradient(fun, params, rel_step / 2)
    n2 = np.linalg.norm(g2)
    big = np.abs(g2) >= 1e-3 * n2
    comp = np.abs(g1 - g2)[big] / np.abs(g2)[big]
    return {
        "gradient": g2,
        "relative_difference": float(np.linalg.norm(g1 - g2) / n2) if n2 > 0 else 0.0,
        "max_component_difference": float(comp.max(initial=0.0)),
    }


def relative_l2_error(p_est: CoefficientField, p_true: CoefficientField) -> float:
    d = p_est.samples - p_true.samples
    return float(np.sqrt(trapezoid(d * d, p_true.grid) / trapezoid(p_true.samples**2, p_true.grid)))


def discrepancy_principle(
    instance: InverseProblemInstance,
    lambda_max: float = 1.0,
    lambda_min: float = 1e-10,
    tau: float = 1.0,
    refinements: int = 3,
    optimizer: OptimizerConfig = OptimizerConfig(),
    p0=None,
) -> tuple[float, ReconstructionResult, list]:
    """Largest ``lambda`` whose fitted residual norm is at most ``tau * sigma * ||d||``.

    Decades are scanned from ``lambda_max`` downwards with warm starts until
    the residual drops below the target; the bracketing decade is then
    bisected in ``log(lambda)`` ``refinements`` times. Returns the chosen
    weight, its reconstruction and the scanned ``(lambda, residual)``
    pairs. If no weight reaches the target, the weakest one is returned.
    """
    if instance.sigma <= 0:
        raise PreconditionViolation("the discrepancy principle needs a positive noise level")
    target = tau * instance.noise_norm()
    scan = []

    def fit(lam, start):
        inst = instance.with_lambda(lam)
        res = reconstruct(inst, optimizer, p0=start)
        _, parts = objective(res.params, inst, return_parts=True)
        scan.append((lam, parts["residual_norm"]))
        log.info("lambda=%.3e residual=%.4e target=%.4e", lam, parts["residual_norm"], target)
        return res, parts["residual_norm"]

    n_dec = int(np.ceil(np.log10(lambda_max / lambda_min)))
    prev = None
    lam, res = lambda_max, None
    for k in range(n_dec + 1):
        lam = lambda_max * 10.0**-k
        res, r = fit(lam, p0 if res is None else res.params)
        if r <= target:
            break
        prev = (lam, res)
    else:
        return lam, res, scan
    if prev is None:
        return lam, res, scan
    good = (lam, res)
    hi, hi_res = prev
    for _ in range(refinements):
        mid = np.sqrt(hi * good[0])
        mres, r = fit(mid, hi_res.params)
        if r <= target:
            good = (mid, mres)
        else:
            hi, hi_res = mid, mres
    return good[0], good[1], scan


def save_instance(instance: InverseProblemInstance, directory, stem: str = "instance") -> tuple[Path, Path]:
    """Write ``<stem>.json`` (configuration, parameters, seed, sampled ``a``)
    and ``<stem>_trace.csv`` (observed and, when known, clean trace)."""
    directory = Path(directory)
    cfg = instance.config
    if cfg.right_value is not None:
        raise ValueError("instances with an inhomogeneous right boundary are not serialisable")
    meta = {
        "alpha": cfg.alpha,
        "ell": cfg.ell,
        "T": cfg.horizon,
        "right_bc": cfg.right_bc,
        "n_cells": instance.xgrid.n_cells,
        "n_steps": instance.tgrid.n_steps,
        "n_params": instance.n_params,
        "sigma": instance.sigma,
        "lambda_reg": instance.lambda_reg,
        "seed": instance.seed,
        "noise_norm": instance.noise_norm(),
        "a": instance.a.samples,
        "p_true": None if instance.p_true is None else instance.p_true.samples,
    }
    jpath = write_json(directory / f"{stem}.json", meta)
    cols = {"t": instance.tgrid.nodes, "d": instance.observed}
    if instance.clean is not None:
        cols["d_clean"] = instance.clean
    cpath = write_csv(directory / f"{stem}_trace.csv", cols, {"instance": jpath.name})
    return jpath, cpath


def load_instance(json_path) -> InverseProblemInstance:
    """Inverse of :func:`save_instance`; sampled fields lose their generating
    functions and are evaluated by local cubic interpolation."""
    json_path = Path(json_path)
    meta = json.loads(json_path.read_text())
    _, cols = read_csv(json_path.with_name(json_path.stem + "_trace.csv"))
    cfg = ProblemConfig(alpha=meta["alpha"], ell=meta["ell"], horizon=meta["T"], right_bc=meta["right_bc"])
    xgrid = make_uniform_grid(cfg.ell, meta["n_cells"])
    p_true = meta.get("p_true")
    return InverseProblemInstance(
        config=cfg,
        xgrid=xgrid,
        tgrid=make_time_grid(cfg.horizon, meta["n_steps"]),
        a=CoefficientField(np.asarray(meta["a"], dtype=float), xgrid, "a"),
        observed=cols["d"],
        n_params=meta["n_params"],
        sigma=meta["sigma"],
        lambda_reg=meta["lambda_reg"],
        seed=meta["seed"],
        clean=cols.get("d_clean"),
        p_true=None if p_true is None else CoefficientField(np.asarray(p_true, dtype=float), xgrid, "p"),
    )


def save_result(result: ReconstructionResult, instance: InverseProblemInstance, directory,
                stem: str = "result", extra: Optional[dict] = None) -> tuple[Path, Path]:
    """``<stem>.json`` with the estimate and convergence log, ``<stem>.csv``
    with ``x, p_estimate`` (and ``p_true`` when known) on the solver grid."""
    directory = Path(directory)
    summary = {
        "params": result.params,
        "param_nodes": instance.param_nodes,
        "lambda_reg": instance.lambda_reg,
        "iterations": result.iterations,
        "converged": result.converged,
        "degraded": result.degraded,
        "message": result.message,
        "objective_log": result.objective_log,
        "grad_norm_log": result.grad_norm_log,
    }
    cols = {"x": instance.xgrid.nodes, "p_estimate": result.p_estimate.samples}
    if instance.p_true is not None:
        summary["relative_l2_error"] = relative_l2_error(result.p_estimate, instance.p_true)
        cols["p_true"] = instance.p_true.samples
    summary.update(extra or {})
    jpath = write_json(directory / f"{stem}.json", summary)
    cpath = write_csv(directory / f"{stem}.csv", cols, {"lambda_reg": instance.lambda_reg})
    return jpath, cpath
