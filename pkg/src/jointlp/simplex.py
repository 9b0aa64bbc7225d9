"""Dense two-phase tableau simplex with Bland's rule.

Meant for small equality-form programs ``min c.x  s.t.  A x = b, x >= 0``
where exact vertex solutions matter more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SimplexResult", "SimplexError", "Infeasible", "Unbounded", "simplex"]


class SimplexError(RuntimeError):
    pass


class Infeasible(SimplexError):
    pass


class Unbounded(SimplexError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    basis: np.ndarray
    iterations: int


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.flatnonzero(np.abs(col) > 0)
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def _run(T, basis, allowed, tol, max_iter, it):
    """Bland iterations on tableau ``T`` whose last row is the reduced-cost row."""
    rows = T.shape[0] - 1
    while True:
        if it >= max_iter:
            raise SimplexError(f"iteration limit {max_iter} reached")
        red = T[-1, :-1]
        cand = np.flatnonzero((red < -tol) & allowed)
        if cand.size == 0:
            return it
        c = cand[0]
        col = T[:rows, c]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            raise Unbounded("objective is unbounded below")
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        r = ties[np.argmin(basis[ties])]
        _pivot(T, r, c)
        basis[r] = c
        it += 1


def simplex(c, A, b, tol: float = 1e-9, max_iter: int = 100000) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase 1: artificial variables n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    allowed = np.ones(n + m, dtype=bool)
    it = _run(T, basis, allowed, tol, max_iter, 0)
    if -T[-1, -1] > max(tol, 1e-7) * max(1.0, np.abs(b).max(initial=0)):
        raise Infeasible(f"phase 1 ended with infeasibility {-T[-1, -1]:.3g}")

    # drive artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] < n:
            continue
        row = T[r, :n]
        nz = np.flatnonzero(np.abs(row) > tol)
        if nz.size:
            _pivot(T, r, nz[0])
            basis[r] = nz[0]
        else:
            keep[r] = False
    T = np.vstack([T[:m][keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = basis[keep]

    # phase 2
    T[-1, :n] = c
    T[-1, -1] = 0.0
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]
    it = _run(T, basis, np.ones(n, dtype=bool), tol, max_iter, it)
    x = np.zeros(n)
    x[basis] = T[:-1, -1]
    x[np.abs(x) < tol] = 0.0
    return SimplexResult(x, float(c @ x), basis.copy(), it)
