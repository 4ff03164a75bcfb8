"""Built-in problems: two degenerate counterexamples and one regular tracking problem.

``example1``
    minimize ``int_0^1 x2 dt`` s.t. ``-x1 <= 0``, ``x1 x2 = 0``. The point
    ``(0, 1)`` admits an AKKT sequence but is neither optimal nor KKT.
``example2``
    minimize ``int_0^1 (t - 1/2) x1 dt`` s.t. ``-(t - 1/2) x1^3 + x2 <= 0``,
    ``-x2 <= 0``. The optimum ``(0, 0)`` admits an AKKT sequence but no
    KKT multipliers.
``tracking``
    minimize ``int_0^1 (x - (t - 1/2))^2 / 2 dt`` s.t. ``x <= 0``, with the
    closed-form primal-dual pair ``x(t) = min(t - 1/2, 0)``,
    ``v(t) = max(t - 1/2, 0)``.
"""

from __future__ import annotations

from dataclasses import replace
from enum import Enum

import numpy as np

from .core import CtpProblem, MultiplierPath, TimeGrid, Trajectory, make_uniform_grid

__all__ = ["BuiltinProblemId", "build", "paper_sequence", "reference_pair", "DEFAULT_NODES"]

DEFAULT_NODES = 200


class BuiltinProblemId(str, Enum):
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    TRACKING = "tracking"


def _example1() -> CtpProblem:
    return CtpProblem(
        name="example1",
        n=2,
        p=1,
        m=1,
        T=1.0,
        phi=lambda x, t: x[1],
        grad_phi=lambda x, t: np.array([0.0, 1.0]),
        h=lambda x, t: np.array([x[0] * x[1]]),
        jac_h=lambda x, t: np.array([[x[1], x[0]]]),
        g=lambda x, t: np.array([-x[0]]),
        jac_g=lambda x, t: np.array([[-1.0, 0.0]]),
        reference_point=lambda t: np.array([0.0, 1.0]),
    )


def _example2() -> CtpProblem:
    def g(x, t):
        s = t - 0.5
        return np.array([-s * x[0] ** 3 + x[1], -x[1]])

    def jac_g(x, t):
        s = t - 0.5
        return np.array([[-3.0 * s * x[0] ** 2, 1.0], [0.0, -1.0]])

    return CtpProblem(
        name="example2",
        n=2,
        p=0,
        m=2,
        T=1.0,
        phi=lambda x, t: (t - 0.5) * x[0],
        grad_phi=lambda x, t: np.array([t - 0.5, 0.0]),
        g=g,
        jac_g=jac_g,
        reference_point=lambda t: np.zeros(2),
    )


def _tracking() -> CtpProblem:
    return CtpProblem(
        name="tracking",
        n=1,
        p=0,
        m=1,
        T=1.0,
        phi=lambda x, t: 0.5 * (x[0] - (t - 0.5)) ** 2,
        grad_phi=lambda x, t: np.array([x[0] - (t - 0.5)]),
        g=lambda x, t: np.array([x[0]]),
        jac_g=lambda x, t: np.array([[1.0]]),
        reference_point=lambda t: np.array([min(t - 0.5, 0.0)]),
        metadata={"regular": "constant constraint Jacobian [1]"},
    )


_BUILDERS = {
    BuiltinProblemId.EXAMPLE1: _example1,
    BuiltinProblemId.EXAMPLE2: _example2,
    BuiltinProblemId.TRACKING: _tracking,
}


def build(problem_id: BuiltinProblemId | str, n_nodes: int = DEFAULT_NODES) -> CtpProblem:
    """Construct a built-in problem by id (``example1``, ``example2`` or ``tracking``).

    For ``tracking`` the analytic primal-dual pair is attached as
    ``reference_solution``, sampled on the ``n_nodes`` midpoint grid.
    """
    pid = BuiltinProblemId(problem_id)
    prob = _BUILDERS[pid]()
    if pid is BuiltinProblemId.TRACKING:
        prob = replace(prob, reference_solution=reference_pair(pid, prob.grid(n_nodes)))
    return prob


def reference_pair(
    problem_id: BuiltinProblemId | str, grid: TimeGrid
) -> tuple[Trajectory, MultiplierPath | None]:
    """Reference point sampled on ``grid``; multipliers only where a KKT pair exists."""
    pid = BuiltinProblemId(problem_id)
    prob = _BUILDERS[pid]()
    x = Trajectory.from_function(grid, prob.reference_point)
    if pid is BuiltinProblemId.TRACKING:
        v = np.maximum(grid.nodes - 0.5, 0.0).reshape(-1, 1)
        return x, MultiplierPath(grid, np.zeros((grid.n_nodes, 0)), v)
    return x, None


def paper_sequence(
    problem_id: BuiltinProblemId | str, k: int, grid: TimeGrid | None = None
) -> tuple[Trajectory, MultiplierPath]:
    """Sample the k-th member of the explicit AKKT sequence of ``example1``/``example2``.

    example1: ``x^k = (-1/k, 1)``, ``u^k = v^k = k``.
    example2: ``x^k = ((t - 1/2)/k, 0)``, ``v_1^k = v_2^k = k^2 / (3 (t - 1/2)^2)``;
    singular at ``t = 1/2``, so grids containing that node are rejected. The
    largest sampled multiplier is ``4 k^2 n^2 / 3`` on an even midpoint grid.
    """
    pid = BuiltinProblemId(problem_id)
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if grid is None:
        grid = make_uniform_grid(1.0, DEFAULT_NODES)
    n = grid.n_nodes
    if pid is BuiltinProblemId.EXAMPLE1:
        x = np.tile([-1.0 / k, 1.0], (n, 1))
        return Trajectory(grid, x), MultiplierPath(grid, np.full((n, 1), float(k)), np.full((n, 1), float(k)))
    if pid is BuiltinProblemId.EXAMPLE2:
        s = grid.nodes - 0.5
        if np.any(np.abs(s) <= 1e-12):
            raise ValueError(
                "example2 sequence is singular at t = 1/2; use a grid with an even node count"
            )
        x = np.column_stack([s / k, np.zeros(n)])
        v1 = k**2 / (3.0 * s**2)
        return Trajectory(grid, x), MultiplierPath(grid, np.zeros((n, 0)), np.column_stack([v1, v1]))
    raise ValueError(f"no explicit AKKT sequence is defined for {pid.value!r}")
