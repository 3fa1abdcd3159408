"""Two-phase revised simplex for standard-form linear programs.

    minimize    c @ x
    subject to  A @ x == b,  x >= 0

The basis inverse is kept dense and updated with eta (product-form) pivots,
refactorized periodically and once more before optimality is declared.
Pivoting follows Bland's smallest-index rule by default, which cannot
cycle; ``rule="dantzig"`` picks the most negative reduced cost and falls
back to Bland after a streak of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray
    y: np.ndarray  # simplex multipliers (duals of the equality rows)
    objective: float
    iterations: int


class _Simplex:
    def __init__(self, A, b, tol, rule, max_iter, refactor_every):
        self.A = A  # csc
        self.b = b
        self.tol = tol
        self.rule = rule
        self.max_iter = max_iter
        self.refactor_every = refactor_every
        self.iterations = 0

    def column(self, j):
        A = self.A
        col = np.zeros(A.shape[0])
        start, end = A.indptr[j], A.indptr[j + 1]
        col[A.indices[start:end]] = A.data[start:end]
        return col

    def refactor(self, basis):
        B = np.column_stack([self.column(j) for j in basis])
        return np.linalg.inv(B)

    def run(self, c, basis, allowed):
        """Iterate from a feasible basis; returns status string."""
        m = len(basis)
        Binv = self.refactor(basis)
        xB = Binv @ self.b
        since_refactor = 0
        degenerate_streak = 0
        in_basis = np.zeros(self.A.shape[1], dtype=bool)
        in_basis[basis] = True
        while True:
            if self.iterations >= self.max_iter:
                return "iteration_limit", basis, Binv
            y = c[basis] @ Binv
            d = c - self.A.T @ y
            cand = allowed & ~in_basis & (d < -self.tol)
            if not cand.any():
                if since_refactor:
                    # confirm with a fresh factorization before stopping
                    Binv = self.refactor(basis)
                    xB = Binv @ self.b
                    since_refactor = 0
                    continue
                return "optimal", basis, Binv
            use_bland = self.rule == "bland" or degenerate_streak > 50
            idx = np.flatnonzero(cand)
            j = int(idx[0]) if use_bland else int(idx[np.argmin(d[idx])])
            u = Binv @ self.column(j)
            pos = u > self.tol
            if not pos.any():
                return "unbounded", basis, Binv
            ratios = np.full(m, np.inf)
            ratios[pos] = np.maximum(xB[pos], 0.0) / u[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + self.tol * max(1.0, abs(best)))
            # Bland: leave with the smallest variable index among ties
            r = int(ties[np.argmin(np.asarray(basis)[ties])])
            degenerate_streak = degenerate_streak + 1 if best <= self.tol else 0
            # eta update
            piv = u[r]
            Binv[r] /= piv
            others = np.arange(m) != r
            Binv[others] -= np.outer(u[others], Binv[r])
            in_basis[basis[r]] = False
            basis[r] = j
            in_basis[j] = True
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                Binv = self.refactor(basis)
                since_refactor = 0
            xB = Binv @ self.b


def solve_standard_form(c, A, b, tol: float = 1e-9, rule: str = "bland",
                        max_iter: int = 200_000, refactor_every: int = 64) -> LPResult:
    """Solve ``min c x  s.t.  A x = b, x >= 0``; ``A`` dense or scipy sparse."""
    if rule not in ("bland", "dantzig"):
        raise LPError(f"unknown pivot rule {rule!r}")
    A = sp.csc_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    signs = np.where(flip, -1.0, 1.0)
    A = sp.csc_matrix(sp.diags(signs) @ A)
    b = b * signs
    # phase 1 on [A I]
    A1 = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
    solver = _Simplex(A1, b, tol, rule, max_iter, refactor_every)
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    status, basis, Binv = solver.run(c1, basis, allowed)
    if status != "optimal":
        raise LPError(f"phase 1 ended with status {status}")
    xB = Binv @ b
    infeas = sum(xB[k] for k, j in enumerate(basis) if j >= n)
    if infeas > tol * max(1.0, np.abs(b).max(initial=0.0)):
        return LPResult("infeasible", np.zeros(n), np.zeros(m), np.inf, solver.iterations)
    # drive zero-level artificials out of the basis
    keep_rows = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] < n:
            continue
        row = Binv[r] @ A.toarray() if n * m < 4_000_000 else None
        if row is None:
            row = np.array([Binv[r] @ solver.column(j) for j in range(n)])
        cand = [j for j in np.flatnonzero(np.abs(row) > 1e-7) if j not in basis]
        if cand:
            j = int(cand[0])
            u = Binv @ solver.column(j)
            piv = u[r]
            Binv[r] /= piv
            others = np.arange(m) != r
            Binv[others] -= np.outer(u[others], Binv[r])
            basis[r] = j
        else:
            keep_rows[r] = False  # redundant equality
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    c2 = np.concatenate([c, np.zeros(m)])
    status, basis, Binv = solver.run(c2, basis, allowed)
    if status == "unbounded":
        return LPResult("unbounded", np.zeros(n), np.zeros(m), -np.inf, solver.iterations)
    if status != "optimal":
        return LPResult(status, np.zeros(n), np.zeros(m), np.nan, solver.iterations)
    xB = Binv @ b
    x = np.zeros(n + m)
    x[basis] = xB
    y = c2[basis] @ Binv
    y = np.where(keep_rows, y, 0.0) * signs
    return LPResult("optimal", x[:n], y, float(c @ x[:n]), solver.iterations)
