"""KKT and asymptotic-KKT residuals for node-sampled trajectories.

Complementarity is always measured through the slack part
``g^-(x, t) = max(-g(x, t), 0)``, which coincides with ``-g`` on the
feasible set and vanishes on violated constraints.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import CtpProblem, MultiplierPath, TimeGrid, Trajectory, feasibility, integrate
from .nnls import NnlsError, nnls_free

__all__ = [
    "ResidualReport",
    "KktFit",
    "PwAkktVerdict",
    "g_minus",
    "lagrangian_gradient",
    "lagrangian_value",
    "lagrangian_gradients",
    "weak_dictionary_values",
    "kkt_residual",
    "min_kkt_stationarity",
    "node_min_stationarity",
    "akkt_sequence_report",
    "pw_akkt_check",
    "KKT_TOL",
    "COMP_TOL",
    "DYADIC_DEPTH",
]

KKT_TOL = 1e-6
COMP_TOL = 1e-8
DYADIC_DEPTH = 4


@dataclass(frozen=True)
class ResidualReport:
    stationarity_l1: float
    stationarity_weak_max: float
    comp_sup: float
    comp_l1: float
    feas_eq_sup: float
    feas_ineq_sup: float
    sign_violation: float
    per_node_stationarity: np.ndarray = field(repr=False, compare=False)

    def max_residual(self) -> float:
        return max(
            self.stationarity_l1,
            self.comp_sup,
            self.feas_eq_sup,
            self.feas_ineq_sup,
            self.sign_violation,
        )

    def is_kkt(self, tol: float = KKT_TOL) -> bool:
        return self.max_residual() <= tol

    def scalars(self) -> dict:
        d = asdict(self)
        d.pop("per_node_stationarity")
        return d


def g_minus(problem: CtpProblem, x, t: float) -> np.ndarray:
    """Componentwise ``max(-g_j(x, t), 0)``: slack of satisfied constraints, 0 if active or violated."""
    return np.maximum(-problem.eval_g(np.asarray(x, dtype=float), t), 0.0)


def lagrangian_value(problem: CtpProblem, x, u, v, t: float) -> float:
    x = np.asarray(x, dtype=float)
    val = problem.eval_phi(x, t)
    if problem.p:
        val += float(np.dot(u, problem.eval_h(x, t)))
    if problem.m:
        val += float(np.dot(v, problem.eval_g(x, t)))
    return val


def lagrangian_gradient(problem: CtpProblem, x, u, v, t: float, node=None) -> np.ndarray:
    """``grad phi + jac_h^T u + jac_g^T v`` at ``(x, t)``."""
    x = np.asarray(x, dtype=float)
    grad = problem.eval_grad_phi(x, t, node).copy()
    if problem.p:
        grad += problem.eval_jac_h(x, t, node).T @ np.asarray(u, dtype=float)
    if problem.m:
        grad += problem.eval_jac_g(x, t, node).T @ np.asarray(v, dtype=float)
    return grad


def _check_pair(problem: CtpProblem, x: Trajectory, mult: MultiplierPath) -> None:
    if not x.grid.same_as(mult.grid):
        raise ValueError("trajectory and multipliers live on different grids")
    if x.dim != problem.n:
        raise ValueError(f"trajectory dimension {x.dim} != n={problem.n}")
    if mult.u.shape[1] != problem.p or mult.v.shape[1] != problem.m:
        raise ValueError(
            f"multiplier shapes ({mult.u.shape[1]}, {mult.v.shape[1]}) != (p, m) = ({problem.p}, {problem.m})"
        )


def lagrangian_gradients(problem: CtpProblem, x: Trajectory, mult: MultiplierPath) -> np.ndarray:
    """Stack of ``grad_x L`` at every node, shape ``(n_nodes, n)``."""
    _check_pair(problem, x, mult)
    nodes = x.grid.nodes
    return np.vstack(
        [
            lagrangian_gradient(problem, x.values[i], mult.u[i], mult.v[i], nodes[i], node=i)
            for i in range(x.grid.n_nodes)
        ]
    )


def _dyadic_masks(grid: TimeGrid, depth: int):
    for d in range(depth + 1):
        pieces = 2**d
        idx = np.minimum(np.floor(grid.nodes / grid.T * pieces).astype(int), pieces - 1)
        for j in range(pieces):
            yield idx == j


def weak_dictionary_values(grid: TimeGrid, grads: np.ndarray, depth: int = DYADIC_DEPTH) -> np.ndarray:
    """``|int_S (grad_x L)_c dt|`` for every dyadic interval ``S`` of depth <= ``depth`` and coordinate ``c``.

    The test functions ``+-e_c 1_S`` have sup-norm 1, so every value is
    bounded by the L1 norm of the gradient.
    """
    weighted = grads * grid.weights[:, None]
    vals = [np.abs(weighted[mask].sum(axis=0)) for mask in _dyadic_masks(grid, depth)]
    return np.concatenate(vals) if vals else np.zeros(0)


def kkt_residual(problem: CtpProblem, x: Trajectory, mult: MultiplierPath) -> ResidualReport:
    """Evaluate stationarity, complementarity, feasibility and sign residuals of ``(x, u, v)``.

    ``x`` is a KKT point at tolerance ``tau`` when ``report.is_kkt(tau)``.
    """
    _check_pair(problem, x, mult)
    grid = x.grid
    grads = lagrangian_gradients(problem, x, mult)
    per_node = np.abs(grads).sum(axis=1)
    l1 = integrate(grid, per_node)
    weak = weak_dictionary_values(grid, grads)
    # sign(grad L) is in the dictionary as well; it recovers the L1 norm
    weak_max = max(float(np.max(weak, initial=0.0)), l1)

    if problem.m:
        comp = np.vstack(
            [
                np.abs(mult.v[i] * g_minus(problem, x.values[i], t))
                for i, t in enumerate(grid.nodes)
            ]
        )
        comp_sup = float(comp.max())
        comp_l1 = integrate(grid, comp.max(axis=1))
        sign_violation = float(np.max(np.maximum(-mult.v, 0.0)))
    else:
        comp_sup = comp_l1 = sign_violation = 0.0
    feas_eq, feas_ineq = feasibility(problem, x)
    return ResidualReport(
        stationarity_l1=l1,
        stationarity_weak_max=weak_max,
        comp_sup=comp_sup,
        comp_l1=comp_l1,
        feas_eq_sup=feas_eq,
        feas_ineq_sup=feas_ineq,
        sign_violation=sign_violation,
        per_node_stationarity=per_node,
    )


class KktFit(NamedTuple):
    """Best multipliers for a fixed primal trajectory.

    ``value`` is the quadrature of the per-node distances from ``-grad phi``
    to the cone of admissible constraint-gradient combinations; it is zero
    exactly at KKT points. ``feasible`` is False when ``x`` violates some
    constraint by more than the complementarity tolerance.
    """

    value: float
    multipliers: MultiplierPath
    per_node: np.ndarray
    feasible: bool


def node_min_stationarity(problem: CtpProblem, x, t: float, comp_tol: float = COMP_TOL, node=None):
    """Per-node distance from ``-grad phi(x, t)`` to the admissible multiplier cone.

    Returns ``(u, v, distance)``.
    """
    x = np.asarray(x, dtype=float)
    p, m = problem.p, problem.m
    grad = problem.eval_grad_phi(x, t, node)
    A = np.vstack([problem.eval_jac_h(x, t, node), problem.eval_jac_g(x, t, node)]).T
    slack = g_minus(problem, x, t) > comp_tol if m else np.zeros(0, dtype=bool)
    keep = np.concatenate([np.ones(p, dtype=bool), ~slack])
    free = np.concatenate([np.ones(p, dtype=bool), np.zeros(m, dtype=bool)])
    z = np.zeros(p + m)
    try:
        z[keep], dist = nnls_free(A[:, keep], -grad, free=free[keep])
    except NnlsError as exc:
        where = f"node {node} " if node is not None else ""
        raise NnlsError(f"{where}(t={t!r}): {exc}") from exc
    return z[:p], z[p:], dist


def min_kkt_stationarity(problem: CtpProblem, x: Trajectory, comp_tol: float = COMP_TOL) -> KktFit:
    """Minimize ``||grad phi + jac_h^T u + jac_g^T v||_2`` node by node.

    ``u`` is free, ``v >= 0``, and ``v_j`` is forced to zero wherever
    ``g_j^-(x(t), t) > comp_tol``.

    Raises
    ------
    NnlsError
        If the active-set solve fails at some node; the message names it.
    """
    if x.dim != problem.n:
        raise ValueError(f"trajectory dimension {x.dim} != n={problem.n}")
    grid = x.grid
    u = np.zeros((grid.n_nodes, problem.p))
    v = np.zeros((grid.n_nodes, problem.m))
    dist = np.zeros(grid.n_nodes)
    for i, t in enumerate(grid.nodes):
        u[i], v[i], dist[i] = node_min_stationarity(problem, x.values[i], t, comp_tol, node=i)
    feas_eq, feas_ineq = feasibility(problem, x)
    return KktFit(
        value=integrate(grid, dist),
        multipliers=MultiplierPath(grid, u, v),
        per_node=dist,
        feasible=max(feas_eq, feas_ineq) <= comp_tol,
    )


def akkt_sequence_report(
    problem: CtpProblem, iterates: Sequence[tuple[Trajectory, MultiplierPath]]
) -> list[ResidualReport]:
    """One :class:`ResidualReport` per member of the primal-dual sequence."""
    if len(iterates) == 0:
        raise ValueError("empty iterate sequence")
    grid = iterates[0][0].grid
    for x, mult in iterates:
        if not (x.grid.same_as(grid) and mult.grid.same_as(grid)):
            raise ValueError("all iterates must share one grid")
    return [kkt_residual(problem, x, mult) for x, mult in iterates]


@dataclass(frozen=True)
class PwAkktVerdict:
    certified: bool
    final_weak_stationarity: float
    final_comp_sup: float
    final_sign_violation: float
    distances: list[float]
    distance_decreasing: bool
    inside_tube: bool
    notes: list[str] = field(default_factory=list)


def pw_akkt_check(
    problem: CtpProblem,
    iterates: Sequence[tuple[Trajectory, MultiplierPath]],
    reference: Trajectory | None = None,
    reports: Sequence[ResidualReport] | None = None,
    tol: float = KKT_TOL,
) -> PwAkktVerdict:
    """Judge whether a finite sequence exhibits the pointwise AKKT trend toward ``reference``.

    Requires the final weak stationarity and complementarity at most ``tol``,
    no sign violation, sup-node distances to ``reference`` nonincreasing and
    either shrinking over the run or already at most ``tol``, and every iterate within
    ``problem.locality_radius`` of the reference at every node. Without a
    reference only the residual part is checked.
    """
    if reports is None:
        reports = akkt_sequence_report(problem, iterates)
    last = reports[-1]
    notes = []
    residual_ok = (
        last.stationarity_weak_max <= tol and last.comp_sup <= tol and last.sign_violation == 0.0
    )
    distances: list[float] = []
    decreasing = True
    inside = True
    if reference is not None:
        for x, _ in iterates:
            d = np.linalg.norm(x.values - reference.values, axis=1)
            distances.append(float(d.max()))
            if math.isfinite(problem.locality_radius) and np.any(d >= problem.locality_radius):
                inside = False
        decreasing = all(b <= a for a, b in zip(distances, distances[1:])) and (
            distances[-1] < distances[0] or distances[-1] <= tol
        )
        if not decreasing:
            notes.append("primal iterates do not approach the reference point")
        if not inside:
            notes.append("iterates leave the locality tube")
    else:
        notes.append("no reference point: primal convergence not checked")
    if not residual_ok:
        notes.append("final stationarity/complementarity residuals above tolerance")
    return PwAkktVerdict(
        certified=residual_ok and decreasing and inside,
        final_weak_stationarity=last.stationarity_weak_max,
        final_comp_sup=last.comp_sup,
        final_sign_violation=last.sign_violation,
        distances=distances,
        distance_decreasing=decreasing,
        inside_tube=inside,
        notes=notes,
    )
