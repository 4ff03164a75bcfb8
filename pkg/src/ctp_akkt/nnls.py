"""Small dense least squares with sign constraints on a subset of the unknowns."""

from __future__ import annotations

import numpy as np

__all__ = ["NnlsError", "nnls_free"]


class NnlsError(RuntimeError):
    pass


def _lstsq_on(A, b, cols):
    z = np.zeros(A.shape[1])
    if cols.any():
        z[cols] = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
    return z


def nnls_free(A, b, free=None, maxiter=None):
    """Solve ``min ||A z - b||_2`` with ``z_j >= 0`` for every ``j`` not in ``free``.

    Lawson-Hanson active-set iteration in which the unconstrained columns
    start (and stay) in the passive set. Subproblems use a minimum-norm
    least-squares solve, so rank-deficient ``A`` is allowed; the residual is
    unique even when ``z`` is not.

    Parameters
    ----------
    A : array_like, shape (r, c)
    b : array_like, shape (r,)
    free : array_like of bool, shape (c,), optional
        Columns whose coefficient is unrestricted in sign. Default: none.
    maxiter : int, optional
        Bound on passive-set changes, default ``3 * c + 10``.

    Returns
    -------
    z : numpy.ndarray, shape (c,)
    rnorm : float
        ``||A z - b||_2``.

    Raises
    ------
    NnlsError
        If the iteration limit is hit.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    r, c = A.shape
    if b.shape != (r,):
        raise ValueError(f"b has shape {b.shape}, expected ({r},)")
    free = np.zeros(c, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if c == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    if maxiter is None:
        maxiter = 3 * c + 10

    scale = max(1.0, float(np.max(np.abs(A), initial=0.0))) * max(1.0, float(np.max(np.abs(b), initial=0.0)))
    tol = 10.0 * np.finfo(float).eps * max(r, c) * scale

    passive = free.copy()
    z = _lstsq_on(A, b, passive)
    for _ in range(maxiter):
        w = A.T @ (b - A @ z)
        cand = ~passive & (w > tol)
        if not cand.any():
            break
        j = int(np.argmax(np.where(cand, w, -np.inf)))
        passive[j] = True
        for _ in range(maxiter):
            s = _lstsq_on(A, b, passive)
            bad = passive & ~free & (s <= 0.0)
            if not bad.any():
                z = s
                break
            # step back to the boundary of the feasible orthant
            alpha = np.min(z[bad] / (z[bad] - s[bad]))
            z = z + alpha * (s - z)
            drop = passive & ~free & (z <= tol)
            z[drop] = 0.0
            passive &= ~drop
        else:
            raise NnlsError("inner loop did not terminate")
    else:
        raise NnlsError(f"no convergence within {maxiter} iterations")
    z[~free] = np.maximum(z[~free], 0.0)
    return z, float(np.linalg.norm(A @ z - b))
