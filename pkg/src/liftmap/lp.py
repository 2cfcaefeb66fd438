"""Dense-tableau two-phase simplex with dual-simplex warm starts for added rows.

The solver maximizes ``c.x`` over a :class:`~liftmap.lift.LinearProgram`.
Internally the problem is put in standard form ``min -c.x', A x' = b,
x' >= 0`` by shifting lower bounds to zero, adding a slack per inequality
row, and turning finite upper bounds that are not already implied by the
equality rows into explicit rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lift import LinearProgram

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-8
BLAND_AFTER = 1000
DUAL_FEAS_TOL = 1e-10
PERTURBATION = 1e-7
DRIVE_OUT_TOL = 1e-7  # smaller entries in an artificial's row are treated as a redundant row


@dataclass(frozen=True)
class LPSolution:
    status: str  # optimal | infeasible | unbounded | iteration-limit
    objective: float
    point: np.ndarray
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def implied_upper_bounds(lp: LinearProgram, passes: int = 3) -> np.ndarray:
    """Upper bounds implied by the equality rows and lower bounds alone.

    Explicit upper bounds are deliberately not used, so a bound found here
    makes the corresponding explicit row redundant.
    """
    lo = lp.lower.copy()
    up = np.full(lp.num_vars, np.inf)
    for _ in range(passes):
        changed = False
        for a, b in zip(lp.A_eq, lp.b_eq):
            nz = np.flatnonzero(a)
            pos = a[nz] > 0
            # maximal value the other terms can subtract from b
            low_terms = np.where(pos, a[nz] * lo[nz], a[nz] * up[nz])
            if not np.all(np.isfinite(low_terms)):
                continue
            total = low_terms.sum()
            for k, j in enumerate(nz):
                if not pos[k]:
                    continue
                bound = (b - (total - low_terms[k])) / a[j]
                if bound < up[j] - 1e-12:
                    up[j] = bound
                    changed = True
        if not changed:
            break
    return up


class Simplex:
    """Stateful solver; keeps the optimal basis so rows can be added and re-solved."""

    def __init__(self, lp: LinearProgram, max_iters: int = 100_000):
        if not np.all(np.isfinite(lp.lower)):
            raise ValueError("variables need finite lower bounds")
        self.lp = lp
        self.max_iters = max_iters
        self.iterations = 0
        nv = lp.num_vars
        shift = lp.lower
        implied = implied_upper_bounds(lp)
        bounded = [j for j in range(nv) if np.isfinite(lp.upper[j]) and implied[j] > lp.upper[j] + 1e-12]
        m_eq, m_ub, m_bd = len(lp.b_eq), len(lp.b_ub), len(bounded)
        ncols = nv + m_ub + m_bd
        A = np.zeros((m_eq + m_ub + m_bd, ncols))
        b = np.zeros(m_eq + m_ub + m_bd)
        A[:m_eq, :nv] = lp.A_eq
        b[:m_eq] = lp.b_eq - lp.A_eq @ shift
        A[m_eq:m_eq + m_ub, :nv] = lp.A_ub
        A[m_eq:m_eq + m_ub, nv:nv + m_ub] = np.eye(m_ub)
        b[m_eq:m_eq + m_ub] = lp.b_ub - lp.A_ub @ shift
        for r, j in enumerate(bounded):
            A[m_eq + m_ub + r, j] = 1.0
            A[m_eq + m_ub + r, nv + m_ub + r] = 1.0
            b[m_eq + m_ub + r] = lp.upper[j] - shift[j]
        self._A = A
        self._b = b
        self._cost = np.concatenate([-lp.c, np.zeros(m_ub + m_bd)])
        self._shift = shift
        self._nv = nv
        self.basis: list[int] | None = None
        self.M: np.ndarray | None = None  # rows: constraints..., reduced costs; last column rhs
        self.status = "unsolved"
        self._budget = max_iters
        self._rng = np.random.default_rng(0)  # fixed seed keeps pivoting deterministic

    # -- tableau primitives ----------------------------------------------------

    def _pivot(self, p: int, q: int) -> None:
        M = self.M
        M[p] /= M[p, q]
        col = M[:, q].copy()
        col[p] = 0.0
        nz = np.flatnonzero(col)
        if len(nz):
            M[nz] -= np.outer(col[nz], M[p])
        self.basis[p] = q
        self.iterations += 1

    def _primal(self, cost_row: int, ncols: int) -> str:
        """Primal simplex on the first ``ncols`` columns, minimizing row ``cost_row``."""
        M = self.M
        m = len(self.basis)
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self._budget:
                return "iteration-limit"
            d = M[cost_row, :ncols]
            if bland:
                cand = np.flatnonzero(d < -COST_TOL)
                if not len(cand):
                    return "optimal"
                q = int(cand[0])
            else:
                q = int(np.argmin(d))
                if d[q] >= -COST_TOL:
                    return "optimal"
            colq = M[:m, q]
            rows = np.flatnonzero(colq > PIVOT_TOL)
            if not len(rows):
                return "unbounded"
            ratios = M[rows, -1] / colq[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12]
            p = int(min(ties, key=lambda i: self.basis[i]))
            if M[p, -1] <= 1e-12:
                degenerate += 1
                if degenerate > BLAND_AFTER:
                    bland = True
            else:
                degenerate = 0
            self._pivot(p, q)

    def _dual(self, ncols: int) -> str:
        """Dual simplex: basis is dual feasible, restore primal feasibility."""
        M = self.M
        m = len(self.basis)
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self._budget:
                return "iteration-limit"
            rhs = M[:m, -1]
            infeasible = np.flatnonzero(rhs < -DUAL_FEAS_TOL)
            if not len(infeasible):
                return "optimal"
            if bland:
                p = int(min(infeasible, key=lambda i: self.basis[i]))
            else:
                p = int(infeasible[np.argmin(rhs[infeasible])])
            row = M[p, :ncols]
            cand = np.flatnonzero(row < -PIVOT_TOL)
            if not len(cand):
                return "infeasible"
            ratios = np.maximum(M[-1, cand], 0.0) / -row[cand]
            best = ratios.min()
            q = int(cand[ratios <= best + 1e-12][0])
            if best <= 1e-12:
                degenerate += 1
                if degenerate > BLAND_AFTER:
                    bland = True
            else:
                degenerate = 0
            self._pivot(p, q)

    # -- phases ----------------------------------------------------------------

    def _phase_one(self) -> str:
        A, b = self._A.copy(), self._b.copy()
        neg = b < 0
        A[neg] *= -1
        b[neg] *= -1
        m, n = A.shape
        basis = [-1] * m
        # slack columns with +1 in a row with nonnegative rhs can start basic
        for j in range(self._nv, n):
            col = A[:, j]
            nz = np.flatnonzero(col)
            if len(nz) == 1 and col[nz[0]] == 1.0 and basis[nz[0]] == -1:
                basis[nz[0]] = j
        need = [i for i in range(m) if basis[i] == -1]
        art = np.zeros((m, len(need)))
        for k, i in enumerate(need):
            art[i, k] = 1.0
            basis[i] = n + k
        M = np.zeros((m + 2, n + len(need) + 1))
        M[:m, :n] = A
        M[:m, n:n + len(need)] = art
        M[:m, -1] = b
        M[m, :n] = self._cost  # phase-two costs ride along
        phase1 = np.zeros(n + len(need))
        phase1[n:] = 1.0
        M[m + 1, :-1] = phase1
        for i in range(m):
            if basis[i] >= n:
                M[m + 1] -= M[i]
        self.M, self.basis = M, basis
        status = self._primal(m + 1, n + len(need))
        if status == "iteration-limit":
            return status
        if -M[m + 1, -1] > FEAS_TOL:
            return "infeasible"
        # drive remaining artificials out of the basis or drop redundant rows
        # (a zero tableau row under an artificial means that artificial's own
        # constraint row is a combination of the others)
        drop_tab, drop_orig = [], set()
        for i in range(m):
            if self.basis[i] >= n:
                row = np.abs(M[i, :n])
                q = int(np.argmax(row))
                if row[q] > DRIVE_OUT_TOL:
                    self._pivot(i, q)
                else:
                    drop_tab.append(i)
                    drop_orig.add(need[self.basis[i] - n])
        keep_tab = [i for i in range(m) if i not in drop_tab]
        keep_orig = [i for i in range(m) if i not in drop_orig]
        self.M = np.delete(M[keep_tab + [m]], np.s_[n:n + len(need)], axis=1)
        self.basis = [self.basis[i] for i in keep_tab]
        self._A, self._b = self._A[keep_orig], self._b[keep_orig]
        return "optimal"

    def _refactor(self) -> None:
        """Recompute the tableau from the original columns for the current basis."""
        A, b, c = self._A, self._b, self._cost
        B = A[:, self.basis]
        T = np.linalg.solve(B, np.column_stack([A, b]))
        d = c - c[self.basis] @ T[:, :-1]
        z = -c[self.basis] @ T[:, -1]
        self.M = np.vstack([T, np.append(d, z)])
        for i, j in enumerate(self.basis):
            self.M[:, j] = 0.0
            self.M[i, j] = 1.0

    def _finish(self) -> LPSolution:
        n = self._A.shape[1]
        status = "optimal"
        for _ in range(5):
            self._refactor()
            m = len(self.basis)
            if np.any(self.M[:m, -1] < -DUAL_FEAS_TOL):
                status = self._dual(n)
            elif np.any(self.M[-1, :n] < -COST_TOL):
                status = self._primal(m, n)
            else:
                status = "optimal"
                break
            if status != "optimal":
                break
        self.status = status
        x = self._point()
        obj = float(self.lp.c @ x) if status == "optimal" else float("nan")
        return LPSolution(status, obj, x, self.iterations)

    def _point(self) -> np.ndarray:
        n = self._A.shape[1]
        xs = np.zeros(n)
        m = len(self.basis)
        xs[self.basis] = self.M[:m, -1]
        xs[np.abs(xs) < 1e-13] = 0.0
        return xs[: self._nv] + self._shift

    def _perturb_costs(self, ncols: int) -> None:
        """Break dual degeneracy with small positive shifts of nonbasic reduced costs.

        The shifts keep the basis dual feasible; :meth:`_finish` restores the
        true costs and cleans up with primal pivots.
        """
        d = self.M[-1, :ncols]
        nonbasic = np.ones(ncols, dtype=bool)
        nonbasic[self.basis] = False
        scale = 1.0 + np.abs(d[nonbasic])
        d[nonbasic] += PERTURBATION * scale * (1.0 + self._rng.random(int(nonbasic.sum())))

    def solve(self) -> LPSolution:
        self._budget = self.iterations + self.max_iters
        status = self._phase_one()
        if status != "optimal":
            self.status = status
            return LPSolution(status, float("nan"), np.full(self._nv, np.nan), self.iterations)
        m, n = len(self.basis), self._A.shape[1]
        status = self._primal(m, n)
        if status != "optimal":
            self.status = status
            return LPSolution(status, float("nan"), self._point(), self.iterations)
        return self._finish()

    def add_constraint(self, row, rhs: float) -> LPSolution:
        """Add ``row . x <= rhs`` (structural variables) and re-solve from the current basis."""
        if self.status != "optimal":
            raise RuntimeError("add_constraint needs an optimal basis")
        row = np.asarray(row, dtype=float)
        m, n = self._A.shape
        newA = np.zeros((m + 1, n + 1))
        newA[:m, :n] = self._A
        newA[m, : self._nv] = row
        newA[m, n] = 1.0
        self._A = newA
        self._b = np.append(self._b, rhs - row @ self._shift)
        self._cost = np.append(self._cost, 0.0)
        self.basis.append(n)
        self._refactor()
        self._perturb_costs(n + 1)
        self._budget = self.iterations + self.max_iters
        status = self._dual(n + 1)
        if status != "optimal":
            self.status = status
            return LPSolution(status, float("nan"), self._point(), self.iterations)
        status = self._primal(len(self.basis), n + 1)
        if status != "optimal":
            self.status = status
            return LPSolution(status, float("nan"), self._point(), self.iterations)
        return self._finish()


def lp_solve(lp: LinearProgram, max_iters: int = 100_000) -> LPSolution:
    return Simplex(lp, max_iters).solve()
