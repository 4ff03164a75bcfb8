"""Sufficient criteria under which asymptotic-KKT points are genuine KKT points.

Three checks, any one of which certifies promotion:

* bounded multipliers along the sequence,
* ``det(Y Y^T) >= K`` at every node of the limit point, where ``Y`` stacks
  the constraint gradients,
* a lower bound on the smallest singular value of ``Y^T`` along the
  sequence. This is the finite-dimensional stand-in for metric regularity
  of the constraint map and is reported as a surrogate only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .alm import SolverTrace
from .core import CtpProblem, MultiplierPath, Trajectory
from .residuals import KKT_TOL, kkt_residual

__all__ = [
    "BoundVerdict",
    "CqThresholds",
    "CqReport",
    "FullRankResult",
    "JacobianStack",
    "MultiplierBoundResult",
    "SigmaResult",
    "check_full_rank",
    "check_multiplier_bound",
    "check_sigma_min",
    "diagnose",
    "jacobian_stack",
]

STABLE_REL = 0.1


class BoundVerdict(str, Enum):
    BOUNDED = "bounded"
    GROWING = "growing"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class JacobianStack:
    """Constraint gradients at one node: rows ``grad h_1..grad h_p, grad g_1..grad g_m``."""

    t: float
    matrix: np.ndarray

    def psi(self, u, v) -> np.ndarray:
        """``Y^T (u, v)``: the constraint part of the Lagrangian gradient."""
        return self.matrix.T @ np.concatenate([np.atleast_1d(u), np.atleast_1d(v)])

    def gram_det(self) -> float:
        if self.matrix.shape[0] == 0:
            return 1.0
        return float(np.linalg.det(self.matrix @ self.matrix.T))

    def sigma_min(self) -> float:
        """Smallest singular value of ``Y^T`` as a map on ``R^(p+m)``; ``inf`` when ``p+m = 0``."""
        rows, cols = self.matrix.shape
        if rows == 0:
            return math.inf
        if rows > cols:
            return 0.0
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])


def jacobian_stack(problem: CtpProblem, x, t: float, node=None) -> JacobianStack:
    x = np.asarray(x, dtype=float)
    mat = np.vstack([problem.eval_jac_h(x, t, node), problem.eval_jac_g(x, t, node)])
    return JacobianStack(float(t), mat)


@dataclass(frozen=True)
class MultiplierBoundResult:
    verdict: BoundVerdict
    sup_norms: list[float]
    k_u: float
    k_v: float
    window: int
    growth_factor: float


def _bound_verdict(sups: Sequence[float], window: int, growth_factor: float) -> BoundVerdict:
    if len(sups) < window or not all(math.isfinite(s) for s in sups):
        return BoundVerdict.INCONCLUSIVE
    tail = list(sups[-window:])
    positive = [s for s in sups if s > 0]
    grew = bool(positive) and sups[-1] >= growth_factor * min(positive)
    if grew and all(b >= a for a, b in zip(tail, tail[1:])):
        return BoundVerdict.GROWING
    hi, lo = max(tail), min(tail)
    if not grew and (hi == 0.0 or hi <= (1.0 + STABLE_REL) * lo):
        return BoundVerdict.BOUNDED
    return BoundVerdict.INCONCLUSIVE


def check_multiplier_bound(
    mults: Sequence[MultiplierPath],
    window: int = 3,
    growth_factor: float = 10.0,
    sup_norms: Sequence[float] | None = None,
) -> MultiplierBoundResult:
    """Classify ``s_k = max_i ||(u^k(t_i), v^k(t_i))||_inf`` as bounded, growing or inconclusive.

    ``growing``: ``s`` ends at least ``growth_factor`` times its smallest
    positive value over the run and is nondecreasing over the last
    ``window`` entries. ``bounded``: no such growth, and the last ``window``
    entries agree within 10%. A finite sequence cannot separate slow
    unbounded growth from convergence, so the test errs toward not
    certifying.

    ``sup_norms`` overrides the norms computed from ``mults`` (e.g. to judge
    the solver's unprojected estimates).
    """
    if len(mults) == 0:
        raise ValueError("empty multiplier sequence")
    if window < 2:
        raise ValueError("window must be at least 2")
    sups = [m.sup_norm() for m in mults] if sup_norms is None else [float(s) for s in sup_norms]
    k_u = max((float(np.max(np.abs(m.u))) if m.u.size else 0.0) for m in mults)
    k_v = max((float(np.max(np.abs(m.v))) if m.v.size else 0.0) for m in mults)
    return MultiplierBoundResult(
        verdict=_bound_verdict(sups, window, growth_factor),
        sup_norms=sups,
        k_u=k_u,
        k_v=k_v,
        window=window,
        growth_factor=growth_factor,
    )


@dataclass(frozen=True)
class FullRankResult:
    holds: bool
    min_det: float
    threshold: float
    argmin_t: float
    notes: list[str] = field(default_factory=list)


def check_full_rank(problem: CtpProblem, x: Trajectory, K: float = 1e-6) -> FullRankResult:
    """``min_i det(Y(t_i) Y(t_i)^T) >= K`` at the nodes of ``x``."""
    if not K > 0:
        raise ValueError("K must be positive")
    notes = []
    if problem.unconstrained:
        return FullRankResult(True, 1.0, K, float(x.grid.nodes[0]), ["no constraints"])
    dets = np.array(
        [jacobian_stack(problem, x.values[i], t, i).gram_det() for i, t in enumerate(x.grid.nodes)]
    )
    i = int(np.argmin(dets))
    if problem.p + problem.m > problem.n:
        notes.append(f"p+m = {problem.p + problem.m} exceeds n = {problem.n}; Y Y^T is singular")
        return FullRankResult(False, float(dets[i]), K, float(x.grid.nodes[i]), notes)
    return FullRankResult(bool(dets[i] >= K), float(dets[i]), K, float(x.grid.nodes[i]), notes)


@dataclass(frozen=True)
class SigmaResult:
    holds: bool
    sigma_min: float
    threshold: float
    psi_sup: float
    psi_bound: float | None
    implied_multiplier_bound: float | None
    label: str = "singular-value surrogate (not a metric regularity proof)"


def check_sigma_min(
    problem: CtpProblem,
    iterates: Sequence[Trajectory],
    rho_threshold: float = 1e-3,
    psi_bound: float | None = None,
    mults: Sequence[MultiplierPath] | None = None,
) -> SigmaResult:
    """Smallest singular value of ``Y^T`` over all iterates and nodes, compared to ``rho_threshold``.

    If it holds, ``||(u, v)|| <= ||Y^T (u, v)|| / sigma``; with ``psi_bound``
    bounding ``||Y^T (u, v)||`` the implied multiplier bound is
    ``psi_bound / sigma``. When ``mults`` are given (for the leading
    iterates; a trailing limit point may lack them) the sup of
    ``||Y^T (u, v)||`` is measured and used if no ``psi_bound`` was supplied.
    """
    if not rho_threshold > 0:
        raise ValueError("rho_threshold must be positive")
    sigma = math.inf
    psi_sup = 0.0
    for k, x in enumerate(iterates):
        for i, t in enumerate(x.grid.nodes):
            stack = jacobian_stack(problem, x.values[i], t, i)
            sigma = min(sigma, stack.sigma_min())
            if mults is not None and k < len(mults):
                psi = stack.psi(mults[k].u[i], mults[k].v[i])
                psi_sup = max(psi_sup, float(np.linalg.norm(psi)))
    holds = sigma >= rho_threshold
    implied = None
    bound = psi_bound if psi_bound is not None else (psi_sup if mults is not None else None)
    if holds and bound is not None and (psi_bound is None or psi_sup <= psi_bound):
        implied = bound / sigma if math.isfinite(sigma) else 0.0
    return SigmaResult(holds, sigma, rho_threshold, psi_sup, psi_bound, implied)


@dataclass(frozen=True)
class CqThresholds:
    K: float = 1e-6
    rho_threshold: float = 1e-3
    growth_factor: float = 10.0
    window: int = 3
    psi_bound: float | None = None
    akkt_tol: float = KKT_TOL


@dataclass(frozen=True)
class CqReport:
    mult_bound: MultiplierBoundResult
    full_rank: FullRankResult
    sigma: SigmaResult
    promotion_certified: bool
    recommend_min_kkt: bool
    notes: list[str]

    @property
    def mult_bound_verdict(self) -> BoundVerdict:
        return self.mult_bound.verdict

    @property
    def fullrank_verdict(self) -> str:
        return "holds" if self.full_rank.holds else "fails"

    @property
    def sigma_verdict(self) -> str:
        return "holds" if self.sigma.holds else "fails"

    def to_dict(self) -> dict:
        d = {
            "promotion_certified": self.promotion_certified,
            "recommend_min_kkt": self.recommend_min_kkt,
            "mult_bound": asdict(self.mult_bound),
            "full_rank": asdict(self.full_rank),
            "sigma": asdict(self.sigma),
            "notes": list(self.notes),
        }
        d["mult_bound"]["verdict"] = self.mult_bound.verdict.value
        d["full_rank"]["verdict"] = self.fullrank_verdict
        d["sigma"]["verdict"] = self.sigma_verdict
        return d


def diagnose(
    problem: CtpProblem,
    trace: SolverTrace | Sequence[tuple[Trajectory, MultiplierPath]],
    thresholds: CqThresholds | None = None,
    limit: Trajectory | None = None,
) -> CqReport:
    """Run the three sufficient criteria on a primal-dual sequence.

    ``limit`` is the candidate point the sequence approaches (defaults to the
    final primal iterate); the full-rank test is evaluated there, and the
    singular-value test over the iterates and the limit. For a
    :class:`SolverTrace` the multiplier test uses the unprojected estimates,
    since the safeguard projection can hide growth.
    """
    th = CqThresholds() if thresholds is None else thresholds
    notes: list[str] = []
    sups = None
    if isinstance(trace, SolverTrace):
        pairs = [(r.x, r.mult) for r in trace.iterates]
        sups = [r.mult_sup_unprojected for r in trace.iterates]
        if any(r.projection_active for r in trace.iterates):
            notes.append("safeguard projection was active: multiplier boundedness premise at risk")
    else:
        pairs = list(trace)
    if not pairs:
        raise ValueError("empty trace")
    xs = [x for x, _ in pairs]
    ms = [m for _, m in pairs]
    if limit is None:
        limit = xs[-1]

    mb = check_multiplier_bound(ms, th.window, th.growth_factor, sup_norms=sups)
    fr = check_full_rank(problem, limit, th.K)
    sg = check_sigma_min(problem, xs + [limit], th.rho_threshold, th.psi_bound, mults=ms)
    notes.extend(fr.notes)
    if mb.verdict is BoundVerdict.GROWING:
        notes.append(
            f"multiplier growth detected: sup-norm {mb.sup_norms[0]:.6g} -> {mb.sup_norms[-1]:.6g}"
        )
    promotion = mb.verdict is BoundVerdict.BOUNDED or fr.holds or sg.holds
    final = kkt_residual(problem, *pairs[-1])
    akkt_ok = final.stationarity_weak_max <= th.akkt_tol and final.comp_sup <= th.akkt_tol
    recommend = promotion and akkt_ok
    if recommend:
        notes.append("criteria hold and AKKT residuals vanish: run min_kkt_stationarity to extract limit multipliers")
    elif not promotion:
        notes.append("no sufficient criterion holds: AKKT evidence does not certify a KKT point")
    return CqReport(mb, fr, sg, promotion, recommend, notes)
