"""Safeguarded augmented Lagrangian method for the time-discretized problem.

The discretized objective is a weighted sum of pointwise terms and every
constraint is pointwise, so each outer iteration solves one small
unconstrained subproblem per node. Multiplier estimates are first-order
(PHR) updates projected into fixed boxes before they are reused.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .core import CtpProblem, MultiplierPath, Trajectory
from .residuals import ResidualReport, g_minus, kkt_residual

__all__ = [
    "AlmConfig",
    "AlmStatus",
    "IterateRecord",
    "SolverTrace",
    "InnerResult",
    "augmented_lagrangian",
    "inner_solve",
    "solve",
    "export_trace",
    "default_inner_tol",
]

log = logging.getLogger(__name__)

UNBOUNDED_VALUE = -1e12
ARMIJO_C = 1e-4
NEWTON_MAX_DIM = 8
FD_STEP = 1e-6
ROUNDOFF = 1e-14


def default_inner_tol(k: int) -> float:
    """``10^-k`` floored at ``1e-8``; ``k`` counts outer iterations from 1."""
    return max(10.0 ** (-k), 1e-8)


@dataclass
class AlmConfig:
    rho0: float = 1.0
    rho_growth: float = 10.0
    rho_max: float = 1e12
    tau_progress: float = 0.5
    u_safeguard: float = 1e8
    v_safeguard: float = 1e8
    outer_max: int = 50
    inner_max: int = 200
    inner_tol_schedule: Callable[[int], float] | Sequence[float] = default_inner_tol
    stop_tol: float = 1e-6
    x0: Trajectory | None = None
    n_nodes: int = 200
    growth_window: int = 3

    def validate(self) -> None:
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not self.rho_growth > 1:
            raise ValueError("rho_growth must exceed 1")
        if not self.rho_max > 0:
            raise ValueError("rho_max must be positive")
        if not 0 < self.tau_progress < 1:
            raise ValueError("tau_progress must lie in (0, 1)")
        if not (self.u_safeguard > 0 and self.v_safeguard > 0):
            raise ValueError("safeguards must be positive")
        if self.outer_max < 1 or self.inner_max < 1:
            raise ValueError("iteration limits must be at least 1")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if self.growth_window < 2:
            raise ValueError("growth_window must be at least 2")
        if not callable(self.inner_tol_schedule):
            sched = [float(s) for s in self.inner_tol_schedule]
            if not sched or any(s <= 0 for s in sched):
                raise ValueError("inner tolerances must be positive")
            if any(b > a for a, b in zip(sched, sched[1:])):
                raise ValueError("inner tolerance schedule must be nonincreasing")

    def inner_tol(self, k: int) -> float:
        sched = self.inner_tol_schedule
        if callable(sched):
            return float(sched(k))
        return float(sched[min(k, len(sched)) - 1])


class AlmStatus(str, Enum):
    CONVERGED_KKT = "converged_kkt"
    AKKT_NO_KKT_PROGRESS = "akkt_no_kkt_progress"
    PENALTY_CAP_REACHED = "penalty_cap_reached"
    ITERATION_CAP_REACHED = "iteration_cap_reached"
    UNBOUNDED_BELOW_SUSPECTED = "unbounded_below_suspected"


@dataclass(frozen=True)
class IterateRecord:
    x: Trajectory
    mult: MultiplierPath
    rho: float
    report: ResidualReport
    inner_iterations: int
    mult_sup_unprojected: float
    progress: float
    projection_active: bool
    clipped_nodes: int = 0


@dataclass
class SolverTrace:
    iterates: list[IterateRecord] = field(default_factory=list)
    status: AlmStatus | None = None
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.iterates)

    @property
    def final(self) -> IterateRecord:
        return self.iterates[-1]


def augmented_lagrangian(problem: CtpProblem, x, ubar, vbar, rho: float, t: float):
    """PHR augmented Lagrangian at one node and its gradient in ``x``.

    ``phi + sum(ubar h + rho/2 h^2) + sum(max(0, vbar + rho g)^2 - vbar^2) / (2 rho)``
    """
    if not rho > 0:
        raise ValueError(f"penalty parameter must be positive, got {rho!r}")
    x = np.asarray(x, dtype=float)
    value = problem.eval_phi(x, t)
    grad = problem.eval_grad_phi(x, t).copy()
    if problem.p:
        h = problem.eval_h(x, t)
        value += float(np.dot(ubar, h) + 0.5 * rho * np.dot(h, h))
        grad += problem.eval_jac_h(x, t).T @ (ubar + rho * h)
    if problem.m:
        shifted = np.maximum(0.0, vbar + rho * problem.eval_g(x, t))
        value += float(np.dot(shifted, shifted) - np.dot(vbar, vbar)) / (2.0 * rho)
        grad += problem.eval_jac_g(x, t).T @ shifted
    return value, grad


class InnerResult(NamedTuple):
    x: np.ndarray
    grad_norm: float
    iterations: int
    unbounded: bool


def _fd_hessian(grad_fn, x, rho=1.0):
    # penalty kinks sit O(1/rho) away; shrink the step so central differences do not straddle them
    n = x.size
    H = np.empty((n, n))
    for j in range(n):
        step = FD_STEP * max(1.0, abs(x[j])) / math.sqrt(max(1.0, rho))
        e = np.zeros(n)
        e[j] = step
        H[:, j] = (grad_fn(x + e) - grad_fn(x - e)) / (2.0 * step)
    return 0.5 * (H + H.T)


def _newton_direction(H, g):
    """Newton direction if the Hessian is numerically positive definite, else None."""
    if not np.all(np.isfinite(H)):
        return None
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return None
    d = -np.linalg.solve(L.T, np.linalg.solve(L, g))
    if not np.all(np.isfinite(d)) or float(g @ d) >= 0:
        return None
    return d


def inner_solve(problem: CtpProblem, t: float, x, ubar, vbar, rho: float, tol: float, inner_max: int) -> InnerResult:
    """Minimize the node augmented Lagrangian from warm start ``x``.

    Armijo backtracking (``c = 1e-4``, halving) along a damped Newton
    direction built from a finite-difference Hessian when ``n <= 8`` and that
    Hessian is positive definite, otherwise along the negative gradient.
    Gradient steps start from twice the last accepted step length. A step
    whose value change is within round-off of ``f`` is accepted if it
    reduces the gradient norm.
    Stops when ``||grad||_inf <= tol`` or after ``inner_max`` iterations.
    ``unbounded`` is set when the value drops below ``-1e12`` or stops being
    finite.
    """
    if not tol > 0:
        raise ValueError("inner tolerance must be positive")
    ubar = np.asarray(ubar, dtype=float)
    vbar = np.asarray(vbar, dtype=float)

    def fg(z):
        return augmented_lagrangian(problem, z, ubar, vbar, rho, t)

    def grad_only(z):
        return fg(z)[1]

    x = np.array(x, dtype=float)
    f, g = fg(x)
    alpha_gd = 1.0
    it = 0
    for it in range(1, inner_max + 1):
        if not math.isfinite(f) or f < UNBOUNDED_VALUE:
            return InnerResult(x, float(np.max(np.abs(g))), it - 1, True)
        gnorm = float(np.max(np.abs(g), initial=0.0))
        if gnorm <= tol:
            return InnerResult(x, gnorm, it - 1, False)

        directions = []
        if x.size <= NEWTON_MAX_DIM:
            d = _newton_direction(_fd_hessian(grad_only, x, rho), g)
            if d is not None:
                directions.append((d, 1.0, False))
        directions.append((-g, min(2.0 * alpha_gd, 1e30), True))

        accepted = False
        for d, alpha, is_gd in directions:
            slope = float(g @ d)
            for _ in range(200):
                x_new = x + alpha * d
                f_new, g_new = fg(x_new)
                if not math.isfinite(f_new) or f_new < UNBOUNDED_VALUE:
                    return InnerResult(x_new, float(np.max(np.abs(g_new))), it, True)
                if f_new <= f + ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                # decrease below the resolution of f: fall back to the gradient norm
                if abs(f_new - f) <= ROUNDOFF * max(abs(f), abs(f_new)) and np.max(np.abs(g_new)) < gnorm:
                    accepted = True
                    break
                alpha *= 0.5
                if alpha * float(np.max(np.abs(d))) <= 1e-300:
                    break
            if accepted:
                if is_gd:
                    alpha_gd = alpha
                x, f, g = x_new, f_new, g_new
                break
        if not accepted:
            # no decrease representable in floating point
            break
    return InnerResult(x, float(np.max(np.abs(g), initial=0.0)), it, False)


def _clip_to_ball(x, center, radius):
    d = x - center
    nrm = float(np.linalg.norm(d))
    if nrm < radius:
        return x, False
    # strictly inside the open ball
    return center + d * (radius * (1.0 - 1e-12) / nrm), True


def _stable(values, rel=0.1) -> bool:
    lo, hi = min(values), max(values)
    return hi <= (1.0 + rel) * lo or hi == 0.0


def solve(problem: CtpProblem, config: AlmConfig | None = None) -> SolverTrace:
    """Run the safeguarded augmented Lagrangian method and record every outer iterate.

    Per outer iteration ``k``: node-wise inner solves warm-started from
    ``x^{k-1}``; estimates ``u = ubar + rho h``, ``v = max(0, vbar + rho g)``;
    projection into ``[-u_safeguard, u_safeguard]`` and ``[0, v_safeguard]``;
    penalty growth by ``rho_growth`` when the progress measure
    ``max(feasibility, complementarity)`` of the unprojected estimates
    failed to shrink by ``tau_progress``.

    Terminates with ``converged_kkt`` once the KKT residual of the projected
    pair is at most ``stop_tol`` and the unprojected multiplier sup-norm has
    stayed within 10% over the last ``growth_window`` iterates (small
    residuals with drifting multipliers are AKKT, not KKT, evidence);
    ``akkt_no_kkt_progress`` when stationarity
    and complementarity are within ``stop_tol`` but the multiplier sup-norm
    grew by at least ``rho_growth`` across the last ``growth_window``
    iterates; ``penalty_cap_reached`` once ``rho > rho_max``;
    ``unbounded_below_suspected`` if a subproblem value drops below
    ``-1e12``; ``iteration_cap_reached`` otherwise.
    """
    config = AlmConfig() if config is None else config
    config.validate()
    x0 = config.x0
    grid = x0.grid if x0 is not None else problem.grid(config.n_nodes)
    n_nodes, p, m = grid.n_nodes, problem.p, problem.m
    x = np.zeros((n_nodes, problem.n)) if x0 is None else np.array(x0.values, dtype=float)
    if x.shape != (n_nodes, problem.n):
        raise ValueError(f"x0 has shape {x.shape}, expected {(n_nodes, problem.n)}")

    centers = None
    if math.isfinite(problem.locality_radius):
        ref = problem.reference_point
        centers = (
            np.vstack([ref(t) for t in grid.nodes]) if ref is not None else x.copy()
        )

    ubar = np.zeros((n_nodes, p))
    vbar = np.zeros((n_nodes, m))
    rho = float(config.rho0)
    mu_prev = math.inf
    trace = SolverTrace()
    sup_history: list[float] = []

    for k in range(1, config.outer_max + 1):
        tol = config.inner_tol(k)
        inner_total = 0
        clipped = 0
        unbounded_nodes = []
        for i, t in enumerate(grid.nodes):
            res = inner_solve(problem, t, x[i], ubar[i], vbar[i], rho, tol, config.inner_max)
            inner_total += res.iterations
            if res.unbounded:
                unbounded_nodes.append(i)
                continue
            xi = res.x
            if centers is not None:
                xi, was_clipped = _clip_to_ball(xi, centers[i], problem.locality_radius)
                clipped += was_clipped
            x[i] = xi
        if unbounded_nodes:
            trace.status = AlmStatus.UNBOUNDED_BELOW_SUSPECTED
            trace.notes.append(
                f"outer iteration {k}: subproblem value below {UNBOUNDED_VALUE:g} at "
                f"{len(unbounded_nodes)} node(s), first node {unbounded_nodes[0]}"
            )
            return trace
        if clipped:
            trace.notes.append(f"outer iteration {k}: {clipped} node(s) clipped to the locality ball")

        u_hat = np.empty((n_nodes, p))
        v_hat = np.empty((n_nodes, m))
        comp = 0.0
        for i, t in enumerate(grid.nodes):
            if p:
                u_hat[i] = ubar[i] + rho * problem.eval_h(x[i], t, i)
            if m:
                v_hat[i] = np.maximum(0.0, vbar[i] + rho * problem.eval_g(x[i], t, i))
                comp = max(comp, float(np.max(v_hat[i] * g_minus(problem, x[i], t))))
        u_proj = np.clip(u_hat, -config.u_safeguard, config.u_safeguard)
        v_proj = np.clip(v_hat, 0.0, config.v_safeguard)
        traj = Trajectory(grid, x.copy())
        mult = MultiplierPath(grid, u_proj, v_proj)
        report = kkt_residual(problem, traj, mult)
        mu = max(report.feas_eq_sup, report.feas_ineq_sup, comp)
        stacked = np.hstack([u_hat, v_hat])
        sup_unproj = float(np.max(np.abs(stacked))) if stacked.size else 0.0
        sup_history.append(sup_unproj)
        trace.iterates.append(
            IterateRecord(
                x=traj,
                mult=mult,
                rho=rho,
                report=report,
                inner_iterations=inner_total,
                mult_sup_unprojected=sup_unproj,
                progress=mu,
                projection_active=bool(np.any(u_proj != u_hat) or np.any(v_proj != v_hat)),
                clipped_nodes=clipped,
            )
        )
        log.debug("outer %d rho=%g mu=%.3e kkt=%.3e sup=%.3e", k, rho, mu, report.max_residual(), sup_unproj)

        w = config.growth_window
        if report.max_residual() <= config.stop_tol:
            if p + m == 0 or (len(sup_history) >= w and _stable(sup_history[-w:])):
                trace.status = AlmStatus.CONVERGED_KKT
                return trace
        if (
            report.stationarity_l1 <= config.stop_tol
            and report.comp_sup <= config.stop_tol
            and len(sup_history) >= w
            and sup_history[-1] >= config.rho_growth * sup_history[-w]
        ):
            trace.status = AlmStatus.AKKT_NO_KKT_PROGRESS
            trace.notes.append("multiplier estimates grow while stationarity and complementarity vanish")
            return trace

        if mu > config.tau_progress * mu_prev:
            rho *= config.rho_growth
        mu_prev = mu
        if rho > config.rho_max:
            trace.status = AlmStatus.PENALTY_CAP_REACHED
            return trace
        ubar, vbar = u_proj, v_proj

    trace.status = AlmStatus.ITERATION_CAP_REACHED
    return trace


def export_trace(trace: SolverTrace) -> list[tuple[Trajectory, MultiplierPath]]:
    """The primal-dual iterates of ``trace`` in order."""
    return [(rec.x, rec.mult) for rec in trace.iterates]
