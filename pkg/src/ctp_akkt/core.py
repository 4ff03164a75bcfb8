"""Time grids, node-sampled trajectories and the continuous-time problem container.

Every function in ``L^inf([0, T])`` is stored as its values at the midpoint
nodes of a uniform partition, and every time integral is the midpoint rule
on that partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "TimeGrid",
    "Trajectory",
    "MultiplierPath",
    "CtpProblem",
    "make_uniform_grid",
    "integrate",
    "objective",
    "feasibility",
    "CallbackError",
]


class CallbackError(RuntimeError):
    """A problem callback failed or returned a badly shaped value at a node."""

    def __init__(self, message: str, node: int | None = None):
        self.node = node
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Midpoint nodes ``t_i = (i + 1/2) T / n`` with equal weights ``T / n``."""

    T: float
    n_nodes: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.nodes, self.weights):
            arr.setflags(write=False)

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (self.T == other.T and self.n_nodes == other.n_nodes)


def make_uniform_grid(T: float, n_nodes: int) -> TimeGrid:
    """Build the uniform midpoint grid on ``[0, T]``.

    Raises
    ------
    ValueError
        If ``T`` is not a positive finite number or ``n_nodes < 1``.
    """
    T = float(T)
    if not math.isfinite(T) or T <= 0.0:
        raise ValueError(f"horizon T must be positive and finite, got {T!r}")
    if int(n_nodes) != n_nodes or n_nodes < 1:
        raise ValueError(f"n_nodes must be a positive integer, got {n_nodes!r}")
    n_nodes = int(n_nodes)
    h = T / n_nodes
    nodes = (np.arange(n_nodes, dtype=float) + 0.5) * h
    weights = np.full(n_nodes, h)
    return TimeGrid(T=T, n_nodes=n_nodes, nodes=nodes, weights=weights)


def integrate(grid: TimeGrid, samples) -> float:
    """Midpoint-rule quadrature ``sum_i w_i * samples_i``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.shape[0] != grid.n_nodes:
        raise ValueError(
            f"expected {grid.n_nodes} samples, got array of shape {samples.shape}"
        )
    return float(np.dot(grid.weights, samples))


def _as_matrix(values, n_rows: int, n_cols: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1 and n_cols == 1 and arr.shape[0] == n_rows:
        arr = arr.reshape(n_rows, 1)
    if arr.size == 0 and n_cols == 0:
        arr = np.zeros((n_rows, 0))
    if arr.shape != (n_rows, n_cols):
        raise ValueError(f"{what}: expected shape {(n_rows, n_cols)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-constant representative of ``t -> x(t)``; row ``i`` is ``x(t_i)``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        n_cols = vals.shape[1] if vals.ndim == 2 else 1
        object.__setattr__(
            self, "values", _as_matrix(vals, self.grid.n_nodes, n_cols, "trajectory")
        )

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, grid: TimeGrid, x) -> "Trajectory":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(grid, np.tile(x, (grid.n_nodes, 1)))

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable[[float], object]) -> "Trajectory":
        rows = [np.atleast_1d(np.asarray(fn(t), dtype=float)) for t in grid.nodes]
        return cls(grid, np.vstack(rows))


@dataclass(frozen=True, eq=False)
class MultiplierPath:
    """Equality multipliers ``u`` (n_nodes x p) and inequality multipliers ``v`` (n_nodes x m).

    Negative entries of ``v`` are allowed at construction so that residual
    evaluation can report them as a sign violation.
    """

    grid: TimeGrid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        n = self.grid.n_nodes
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        p = u.shape[1] if u.ndim == 2 else (0 if u.size == 0 else 1)
        m = v.shape[1] if v.ndim == 2 else (0 if v.size == 0 else 1)
        object.__setattr__(self, "u", _as_matrix(u, n, p, "multiplier u"))
        object.__setattr__(self, "v", _as_matrix(v, n, m, "multiplier v"))

    @classmethod
    def zeros(cls, grid: TimeGrid, p: int, m: int) -> "MultiplierPath":
        return cls(grid, np.zeros((grid.n_nodes, p)), np.zeros((grid.n_nodes, m)))

    @property
    def sign_ok(self) -> bool:
        return bool(np.all(self.v >= 0.0))

    def sup_norm(self) -> float:
        """``max_i ||(u(t_i), v(t_i))||_inf``."""
        stacked = np.hstack([self.u, self.v])
        return float(np.max(np.abs(stacked))) if stacked.size else 0.0


def _unconstrained_vec(x, t):
    return np.zeros(0)


def _unconstrained_jac(x, t):
    return np.zeros((0, np.size(x)))


@dataclass(frozen=True, eq=False)
class CtpProblem:
    """Minimize ``int_0^T phi(x(t), t) dt`` s.t. ``h(x(t), t) = 0``, ``g(x(t), t) <= 0`` a.e.

    Callbacks take a state vector ``x`` of length ``n`` and a scalar time and
    must be pure. ``metadata`` holds the integrable bound functions of the
    standing Lipschitz/growth hypotheses as documentation; they are never
    checked.
    """

    name: str
    n: int
    p: int
    m: int
    T: float
    phi: Callable
    grad_phi: Callable
    h: Callable = _unconstrained_vec
    jac_h: Callable = _unconstrained_jac
    g: Callable = _unconstrained_vec
    jac_g: Callable = _unconstrained_jac
    locality_radius: float = math.inf
    metadata: dict = field(default_factory=dict)
    reference_solution: Optional[tuple[Trajectory, MultiplierPath]] = None
    reference_point: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        if min(self.n, self.p, self.m) < 0 or self.n == 0:
            raise ValueError("dimensions must satisfy n >= 1, p >= 0, m >= 0")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if not self.locality_radius > 0:
            raise ValueError("locality_radius must be positive")

    @property
    def unconstrained(self) -> bool:
        return self.p + self.m == 0

    def grid(self, n_nodes: int) -> TimeGrid:
        return make_uniform_grid(self.T, n_nodes)

    # Checked callback evaluation. ``node`` is only used in error messages.

    def eval_phi(self, x, t, node=None) -> float:
        try:
            val = float(self.phi(x, t))
        except Exception as exc:  # noqa: BLE001
            raise CallbackError(f"phi failed at t={t!r}: {exc}", node) from exc
        return val

    def eval_grad_phi(self, x, t, node=None) -> np.ndarray:
        return self._vec(self.grad_phi, x, t, self.n, "grad_phi", node)

    def eval_h(self, x, t, node=None) -> np.ndarray:
        return self._vec(self.h, x, t, self.p, "h", node)

    def eval_g(self, x, t, node=None) -> np.ndarray:
        return self._vec(self.g, x, t, self.m, "g", node)

    def eval_jac_h(self, x, t, node=None) -> np.ndarray:
        return self._mat(self.jac_h, x, t, self.p, "jac_h", node)

    def eval_jac_g(self, x, t, node=None) -> np.ndarray:
        return self._mat(self.jac_g, x, t, self.m, "jac_g", node)

    def _vec(self, fn, x, t, size, what, node):
        try:
            out = np.asarray(fn(x, t), dtype=float).reshape(-1)
        except Exception as exc:  # noqa: BLE001
            raise CallbackError(f"{what} failed at t={t!r}: {exc}", node) from exc
        if out.shape != (size,):
            raise CallbackError(f"{what} returned shape {out.shape}, expected ({size},)", node)
        return out

    def _mat(self, fn, x, t, rows, what, node):
        try:
            out = np.asarray(fn(x, t), dtype=float)
        except Exception as exc:  # noqa: BLE001
            raise CallbackError(f"{what} failed at t={t!r}: {exc}", node) from exc
        if rows == 0:
            return np.zeros((0, self.n))
        out = out.reshape(rows, -1) if out.ndim < 2 else out
        if out.shape != (rows, self.n):
            raise CallbackError(
                f"{what} returned shape {out.shape}, expected ({rows}, {self.n})", node
            )
        return out


def _check_trajectory(problem: CtpProblem, x: Trajectory) -> None:
    if x.dim != problem.n:
        raise ValueError(f"trajectory has dimension {x.dim}, problem expects n={problem.n}")


def objective(problem: CtpProblem, x: Trajectory) -> float:
    """Midpoint quadrature of ``phi(x(t_i), t_i)``."""
    _check_trajectory(problem, x)
    vals = [problem.eval_phi(xi, t, i) for i, (xi, t) in enumerate(zip(x.values, x.grid.nodes))]
    return integrate(x.grid, vals)


def feasibility(problem: CtpProblem, x: Trajectory) -> tuple[float, float]:
    """Return ``(max_i ||h(x_i, t_i)||_inf, max_{i,j} max(g_j(x_i, t_i), 0))``."""
    _check_trajectory(problem, x)
    eq = 0.0
    ineq = 0.0
    for i, (xi, t) in enumerate(zip(x.values, x.grid.nodes)):
        if problem.p:
            eq = max(eq, float(np.max(np.abs(problem.eval_h(xi, t, i)))))
        if problem.m:
            ineq = max(ineq, float(np.max(problem.eval_g(xi, t, i))))
    return eq, max(ineq, 0.0)
