"""Independent reference computations used by the tests."""

import itertools

import numpy as np

from ctp_akkt.residuals import g_minus

def central_difference(f, x, step=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        out[j] = (f(x + e) - f(x - e)) / (2.0 * step)
    return out


def brute_force_distance(A, b, nonneg, pts=21, rounds=200):
    """``min ||A z - b||_2`` over ``z_j >= 0`` for ``nonneg`` columns, by zooming grid search.

    The box recenters on the best grid point; it grows while the best point
    sits on an unconstrained face, per coordinate, and halves otherwise.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = A.shape[1]
    if c == 0:
        return float(np.linalg.norm(b))
    nonneg = np.asarray(nonneg, dtype=bool)
    center = np.zeros(c)
    half = np.full(c, 1.0)
    best = float(np.linalg.norm(b))
    for _ in range(rounds):
        lo = center - half
        hi = center + half
        lo = np.where(nonneg, np.maximum(lo, 0.0), lo)
        axes = [np.linspace(lo[j], hi[j], pts) for j in range(c)]
        idx = np.array(list(itertools.product(range(pts), repeat=c)))
        Z = np.column_stack([axes[j][idx[:, j]] for j in range(c)])
        vals = np.linalg.norm(Z @ A.T - b, axis=1)
        i = int(np.argmin(vals))
        z = Z[i]
        best = min(best, float(vals[i]))
        at_lo_bound = nonneg & (lo == 0.0)
        on_face = (idx[i] == pts - 1) | ((idx[i] == 0) & ~at_lo_bound)
        center = z
        half = np.where(on_face, np.minimum(2.0 * half, 1e12), 0.5 * half)
        if np.all(half < 1e-14 * max(1.0, float(np.max(np.abs(center))))):
            break
    return best


def oracle_node_distance(problem, x, t, comp_tol=1e-8):
    """Distance from ``-grad phi`` to the admissible combinations, via :func:`brute_force_distance`."""
    A = np.vstack([problem.eval_jac_h(x, t), problem.eval_jac_g(x, t)]).T
    keep = np.ones(problem.p + problem.m, dtype=bool)
    if problem.m:
        keep[problem.p :] = g_minus(problem, x, t) <= comp_tol
    nonneg = np.r_[np.zeros(problem.p, dtype=bool), np.ones(problem.m, dtype=bool)]
    return brute_force_distance(A[:, keep], -problem.eval_grad_phi(x, t), nonneg[keep])


def sample_state(problem_id, rng):
    """Random state, half the time placed on the active set of the constraints."""
    active = rng.random() < 0.5
    if problem_id == "example1":
        x = rng.uniform(-2.0, 2.0, 2)
        if active:
            x[0] = 0.0
        return x
    if problem_id == "example2":
        x = rng.uniform(-2.0, 2.0, 2)
        if active:
            x[1] = 0.0
        return x
    x = rng.uniform(-1.0, 1.0, 1)
    if active:
        x[0] = 0.0
    return x


def golden_section(f, a, b, tol=1e-12):
    """Minimizer of a unimodal scalar function on ``[a, b]``."""
    inv = (5**0.5 - 1) / 2
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
