"""Dense revised simplex for bounded-variable LPs.

Minimizes c.x subject to A x = b, lower <= x <= upper, with A sparse (CSC).
The basis inverse is kept explicitly and refactorized periodically; pricing is
Dantzig by default with Bland's rule engaged after a run of degenerate steps.
Callers may pass a starting basis (must be primal feasible); otherwise a
phase-1 with artificial variables runs first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    InternalInvariantError,
    IterationLimitError,
    LPInfeasibleError,
    LPUnboundedError,
)

_REFACTOR_EVERY = 100
_PIVOT_TOL = 1e-10
_STALL_LIMIT = 40


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str


class _Tableau:
    """Mutable solver state for one phase."""

    def __init__(self, A: sp.csc_matrix, b, c, lower, upper, basis, nbval, tol):
        self.A = A
        self.AT = A.transpose().tocsr()
        self.m, self.N = A.shape
        self.b = b
        self.c = c
        self.lower = lower
        self.upper = upper
        self.fixed = (upper - lower) <= 0.0
        self.basis = np.asarray(basis, dtype=np.int64).copy()
        self.in_basis = np.zeros(self.N, dtype=bool)
        self.in_basis[self.basis] = True
        # value of each nonbasic variable (basic entries are ignored)
        self.nbval = nbval.copy()
        self.tol = tol
        self.dtol = tol * (1.0 + float(np.abs(c).max(initial=0.0)))
        self.pivots = 0
        self.iterations = 0
        self.refactor()

    def col(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[a:b], self.A.data[a:b]

    def refactor(self) -> None:
        B = self.A[:, self.basis].toarray()
        try:
            self.B_inv = np.linalg.inv(B)
        except np.linalg.LinAlgError as e:
            raise InternalInvariantError(f"singular basis: {e}") from None
        self.pivots = 0

    def basic_values(self) -> np.ndarray:
        v = np.where(self.in_basis, 0.0, self.nbval)
        r = self.b - self.A @ v
        return self.B_inv @ r

    def full_x(self) -> np.ndarray:
        x = np.where(self.in_basis, 0.0, self.nbval)
        x[self.basis] = self.basic_values()
        return x

    def current_objective(self, x_B: np.ndarray) -> float:
        free_part = float(self.c[self.basis] @ x_B)
        nb = ~self.in_basis
        return free_part + float(self.c[nb] @ self.nbval[nb])

    def pivot(self, q: int, row: int, u: np.ndarray, hit_upper: bool) -> None:
        leave = int(self.basis[row])
        self.nbval[leave] = self.upper[leave] if hit_upper else self.lower[leave]
        self.basis[row] = q
        self.in_basis[leave] = False
        self.in_basis[q] = True
        piv = u[row]
        if abs(piv) < _PIVOT_TOL:
            raise InternalInvariantError("pivot element vanished")
        newrow = self.B_inv[row] / piv
        self.B_inv -= np.outer(u, newrow)
        self.B_inv[row] = newrow
        self.pivots += 1
        if self.pivots >= _REFACTOR_EVERY:
            self.refactor()

    def run(self, max_iters: int) -> None:
        bland = False
        stall = 0
        last_obj = np.inf
        lo_inf = np.isneginf(self.lower)
        up_inf = np.isposinf(self.upper)
        while True:
            if self.iterations >= max_iters:
                raise IterationLimitError(
                    f"simplex iteration limit {max_iters} reached"
                )
            self.iterations += 1
            x_B = self.basic_values()
            y = self.c[self.basis] @ self.B_inv
            d = self.c - self.AT @ y
            nonbasic = ~self.in_basis & ~self.fixed
            at_up = nonbasic & ~up_inf & (self.nbval == self.upper)
            at_lo = nonbasic & ~at_up
            free = nonbasic & lo_inf & up_inf
            can_inc = at_lo & (d < -self.dtol)
            can_dec = (at_up | free) & (d > self.dtol)
            eligible = can_inc | can_dec
            if not eligible.any():
                return
            if bland:
                q = int(np.nonzero(eligible)[0][0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                q = int(np.argmax(score))
            s = 1.0 if can_inc[q] else -1.0
            idx, dat = self.col(q)
            u = self.B_inv[:, idx] @ dat
            su = s * u
            lo_B = self.lower[self.basis]
            up_B = self.upper[self.basis]
            pos = su > _PIVOT_TOL
            neg = su < -_PIVOT_TOL
            t_all = np.full(self.m, np.inf)
            if pos.any():
                t_all[pos] = np.maximum(x_B[pos] - lo_B[pos], 0.0) / su[pos]
            if neg.any():
                t_all[neg] = np.maximum(up_B[neg] - x_B[neg], 0.0) / (-su[neg])
            theta_basic = float(t_all.min(initial=np.inf))
            own = np.inf
            if np.isfinite(self.lower[q]) and np.isfinite(self.upper[q]):
                own = float(self.upper[q] - self.lower[q])
            theta = min(theta_basic, own)
            if not np.isfinite(theta):
                raise LPUnboundedError("objective unbounded below")
            tie_tol = 1e-9 * (1.0 + theta)
            ties = np.nonzero(t_all <= theta_basic + tie_tol)[0]
            if ties.size:
                if bland:
                    block = int(ties[np.argmin(self.basis[ties])])
                else:
                    block = int(ties[np.argmax(np.abs(su[ties]))])
            else:
                block = -1
            if own + tie_tol < theta_basic:
                flip = True
            elif block < 0:
                flip = True
            elif theta_basic + tie_tol < own:
                flip = False
            else:
                # tie between a bound flip and a basis change
                flip = bland and q < int(self.basis[block])
            step = own if flip else float(t_all[block])
            obj = self.current_objective(x_B)
            if step <= 1e-12:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            else:
                if obj < last_obj - 1e-12 * (1.0 + abs(obj)):
                    bland = False
                stall = 0
            last_obj = obj
            if flip:
                self.nbval[q] = self.upper[q] if s > 0 else self.lower[q]
            else:
                self.pivot(q, block, u, hit_upper=bool(neg[block]))


def solve_standard(
    A: sp.csc_matrix,
    b: np.ndarray,
    c: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    basis: np.ndarray | None = None,
    nbval: np.ndarray | None = None,
    tol: float = 1e-7,
    max_iters: int | None = None,
) -> SimplexResult:
    """Solve min c.x, A x = b, lower <= x <= upper.

    basis, when given, must index a feasible nonsingular starting basis; nbval
    then gives the value each nonbasic variable rests at.
    """
    A = sp.csc_matrix(A, dtype=np.float64)
    m, N = A.shape
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if max_iters is None:
        max_iters = 50 * (m + N) + 2000
    iters0 = 0
    n_struct = N
    if basis is None:
        basis, nbval, A, c, lower, upper, iters0 = _phase_one(
            A, b, c, lower, upper, tol, max_iters
        )
    elif nbval is None:
        nbval = _default_nbval(lower, upper)
    tab = _Tableau(A, b, c, lower, upper, basis, nbval, tol)
    tab.run(max_iters)
    x = tab.full_x()
    x = np.minimum(np.maximum(x, lower), upper)
    resid = float(np.abs(A @ x - b).max(initial=0.0))
    if resid > 1e-6 * (1.0 + float(np.abs(b).max(initial=0.0))):
        raise InternalInvariantError(f"primal residual {resid:g} after solve")
    obj = float(c @ x)
    return SimplexResult(
        x=x[:n_struct],
        objective=obj,
        iterations=tab.iterations + iters0,
        status="optimal",
    )


def _default_nbval(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    v = np.where(np.isfinite(lower), lower, 0.0)
    only_up = ~np.isfinite(lower) & np.isfinite(upper)
    v[only_up] = upper[only_up]
    return v


def _phase_one(A, b, c, lower, upper, tol, max_iters):
    """Feasibility phase: artificial identity columns, then drive them out."""
    m, N = A.shape
    nbval = _default_nbval(lower, upper)
    r = b - A @ nbval
    signs = np.where(r >= 0.0, 1.0, -1.0)
    art = sp.diags(signs).tocsc()
    A1 = sp.hstack([A, art], format="csc")
    c1 = np.concatenate([np.zeros(N), np.ones(m)])
    lo1 = np.concatenate([lower, np.zeros(m)])
    up1 = np.concatenate([upper, np.full(m, np.inf)])
    basis = np.arange(N, N + m)
    tab = _Tableau(
        A1, b, c1, lo1, up1, basis, np.concatenate([nbval, np.zeros(m)]), tol
    )
    tab.run(max_iters)
    x1 = tab.full_x()
    feas = float(x1[N:].sum())
    if feas > tol * (1.0 + float(np.abs(b).max(initial=0.0))):
        raise LPInfeasibleError(f"phase-1 optimum {feas:g} > 0")
    # pivot leftover basic artificials out wherever a real column can replace
    # them; a row with no such column is redundant and keeps its artificial,
    # pinned at zero below
    for row in range(m):
        j = int(tab.basis[row])
        if j < N:
            continue
        for cand in range(N):
            if tab.in_basis[cand]:
                continue
            idx, dat = tab.col(cand)
            val = float(tab.B_inv[row, idx] @ dat)
            if abs(val) > 1e-8:
                u = tab.B_inv[:, idx] @ dat
                tab.nbval[j] = 0.0
                tab.pivot(cand, row, u, hit_upper=False)
                break
    up1 = up1.copy()
    up1[N:] = 0.0
    c2 = np.concatenate([c, np.zeros(m)])
    return tab.basis.copy(), tab.nbval.copy(), A1, c2, lo1, up1, tab.iterations


def extract_structural(result: SimplexResult, n_struct: int) -> np.ndarray:
    return result.x[:n_struct]
