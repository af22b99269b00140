"""Grids, coefficient fields, quadrature and boundary traces.

Everything here is immutable after construction and shared by the solvers,
the kernel code and the experiments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ProblemConfig",
    "SpatialGrid",
    "TimeGrid",
    "CoefficientField",
    "FieldSolution",
    "CauchyTrace",
    "make_uniform_grid",
    "make_time_grid",
    "trapezoid",
    "cumulative_trapezoid_weights",
    "boundary_derivative",
    "local_cubic_interp",
]

BC_KINDS = ("neumann", "dirichlet")


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ProblemConfig:
    """Physical parameters of one forward problem.

    ``right_value`` is a function of time (or a constant) giving the flux
    (Neumann) or the value (Dirichlet) imposed at ``x = ell``; ``None``
    means homogeneous.
    """

    alpha: float
    ell: float = 1.0
    horizon: float = 1.0
    right_bc: str = "neumann"
    right_value: Optional[Callable] = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.ell > 0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not self.horizon > 0:
            raise ValueError(f"horizon T must be positive, got {self.horizon}")
        if self.right_bc not in BC_KINDS:
            raise ValueError(f"right_bc must be one of {BC_KINDS}, got {self.right_bc!r}")

    def right_function(self) -> Callable:
        if self.right_value is None:
            return _zero
        if callable(self.right_value):
            return self.right_value
        c = float(self.right_value)
        return lambda t: np.full_like(np.asarray(t, dtype=float), c)

    def echo(self) -> dict:
        """Plain-data description used in CSV headers and reports."""
        return {
            "alpha": self.alpha,
            "ell": self.ell,
            "T": self.horizon,
            "right_bc": self.right_bc + ("" if self.right_value is None else "(inhomogeneous)"),
        }


@dataclass(frozen=True)
class SpatialGrid:
    nodes: np.ndarray
    ell: float
    n_cells: int

    @property
    def h(self) -> float:
        return self.ell / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def index_of(self, x: float) -> int:
        """Index of the last node not exceeding ``x`` (with rounding slack)."""
        k = int(np.floor(x / self.h + 1e-9))
        return min(max(k, 0), self.n_cells)


@dataclass(frozen=True)
class TimeGrid:
    nodes: np.ndarray
    horizon: float
    n_steps: int

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


def make_uniform_grid(ell: float, n_cells: int) -> SpatialGrid:
    """Uniform grid with ``n_cells + 1`` nodes on ``[0, ell]``."""
    if not ell > 0:
        raise ValueError(f"ell must be positive, got {ell}")
    if int(n_cells) != n_cells or n_cells < 1:
        raise ValueError(f"n_cells must be a positive integer, got {n_cells}")
    n_cells = int(n_cells)
    nodes = np.arange(n_cells + 1) * (ell / n_cells)
    nodes[-1] = ell
    nodes.setflags(write=False)
    return SpatialGrid(nodes=nodes, ell=float(ell), n_cells=n_cells)


def make_time_grid(horizon: float, n_steps: int) -> TimeGrid:
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")
    n_steps = int(n_steps)
    nodes = np.arange(n_steps + 1) * (horizon / n_steps)
    nodes[-1] = horizon
    nodes.setflags(write=False)
    return TimeGrid(nodes=nodes, horizon=float(horizon), n_steps=n_steps)


def local_cubic_interp(samples: np.ndarray, h: float, x) -> np.ndarray:
    """Evaluate the piecewise cubic through four neighbouring samples.

    The stencil for the cell containing ``x`` is nodes ``i-1 .. i+2``,
    shifted inwards at the ends. Each value depends on four samples only,
    so a function that vanishes on a run of nodes is reproduced as zero
    on the interior cells of that run.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size - 1
    x = np.asarray(x, dtype=float)
    if n < 3:
        return np.interp(x, np.arange(n + 1) * h, samples)
    cell = np.clip(np.floor(x / h + 1e-12).astype(int), 0, n - 1)
    start = np.clip(cell - 1, 0, n - 3)
    s = x / h - start
    out = np.zeros_like(s)
    for j in range(4):
        basis = np.ones_like(s)
        for m in range(4):
            if m != j:
                basis *= (s - m) / (j - m)
        out += basis * samples[start + j]
    return out


@dataclass(frozen=True)
class CoefficientField:
    """Samples of ``p``, ``q`` or ``a`` on a spatial grid.

    When the field was built from a function, the function is kept so that
    off-grid evaluations (the kernel solver needs half-cell points) are
    exact. Sampled-only fields fall back to local cubic interpolation.
    """

    samples: np.ndarray
    grid: SpatialGrid
    label: str = "p"
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field {self.label!r} has {samples.size} samples, grid has {self.grid.n_nodes} nodes"
            )
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, func: Callable, grid: SpatialGrid, label: str = "p") -> "CoefficientField":
        values = np.broadcast_to(np.asarray(func(grid.nodes), dtype=float), grid.nodes.shape)
        return cls(values, grid, label, func)

    @classmethod
    def constant(cls, value: float, grid: SpatialGrid, label: str = "p") -> "CoefficientField":
        return cls.from_function(lambda x: np.full_like(np.asarray(x, dtype=float), value), grid, label)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape).copy()
        return local_cubic_interp(self.samples, self.grid.h, x)

    def __add__(self, other):
        if isinstance(other, CoefficientField):
            f, g = self.func, other.func
            func = (lambda x: f(x) + g(x)) if f is not None and g is not None else None
            return CoefficientField(self.samples + other.samples, self.grid, self.label, func)
        c = float(other)
        func = (lambda x, f=self.func: f(x) + c) if self.func is not None else None
        return CoefficientField(self.samples + c, self.grid, self.label, func)

    def relabel(self, label: str) -> "CoefficientField":
        return CoefficientField(self.samples, self.grid, label, self.func)


@dataclass(frozen=True)
class FieldSolution:
    """Space-time samples ``values[i, n] = u(x_i, t_n)``."""

    values: np.ndarray
    config: ProblemConfig
    xgrid: SpatialGrid
    tgrid: TimeGrid
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        shape = (self.xgrid.n_nodes, self.tgrid.n_steps + 1)
        if self.values.shape != shape:
            raise ValueError(f"solution array has shape {self.values.shape}, expected {shape}")

    def at_time(self, t: float) -> np.ndarray:
        """Spatial slice at the time node closest to ``t``."""
        n = int(round(t / self.tgrid.dt))
        return self.values[:, min(max(n, 0), self.tgrid.n_steps)]

    def echo(self) -> dict:
        out = self.config.echo()
        out.update(N=self.xgrid.n_cells, M=self.tgrid.n_steps)
        out.update(self.meta)
        return out


@dataclass(frozen=True)
class CauchyTrace:
    """Lateral data at ``x = 0``: ``u(0, t_n)`` and ``u_x(0, t_n)``."""

    u0: np.ndarray
    du0: np.ndarray
    tgrid: TimeGrid

    def __post_init__(self):
        n = self.tgrid.n_steps + 1
        if len(self.u0) != n or len(self.du0) != n:
            raise ValueError("trace lengths must match the time grid")


def trapezoid(values, grid, upto: Optional[int] = None) -> float:
    """Composite trapezoid rule of sampled values over ``[0, x_upto]``.

    ``grid`` may be a :class:`SpatialGrid` or a plain spacing.
    """
    values = np.asarray(values, dtype=float)
    h = grid.h if isinstance(grid, SpatialGrid) else float(grid)
    n = values.shape[0] - 1
    if upto is None:
        upto = n
    if int(upto) != upto or not 0 <= upto <= n:
        raise ValueError(f"upto={upto} outside 0..{n}")
    upto = int(upto)
    if upto == 0:
        return 0.0
    v = values[: upto + 1]
    return float(h * (v.sum(axis=0) - 0.5 * (v[0] + v[-1])))


def cumulative_trapezoid_weights(n_nodes: int, h: float) -> np.ndarray:
    """Lower-triangular matrix ``W`` with ``(W @ f)[i] = trapezoid(f, h, upto=i)``."""
    W = np.tril(np.full((n_nodes, n_nodes), h))
    W[:, 0] *= 0.5
    W[np.arange(n_nodes), np.arange(n_nodes)] *= 0.5
    W[0, 0] = 0.0
    return W


def boundary_derivative(u_slice, grid) -> np.ndarray | float:
    """Second-order one-sided derivative at the first node.

    ``(-3 u_0 + 4 u_1 - u_2) / (2h)``; works along axis 0, so a whole
    space-time array yields the derivative trace in one call.
    """
    u = np.asarray(u_slice, dtype=float)
    if u.shape[0] < 3:
        raise ValueError("boundary_derivative needs at least 3 nodes")
    h = grid.h if isinstance(grid, SpatialGrid) else float(grid)
    d = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    return float(d) if np.ndim(d) == 0 else d
