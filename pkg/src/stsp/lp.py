"""Bounded-variable simplex for LP relaxations.

Rows are written as ``A x - s = 0`` with one logical variable ``s_i`` per
row whose bounds encode the sense and right-hand side, so every constraint
becomes a bound.  The basis inverse is held densely: it is rebuilt from an LU
factorization every ``REFACTOR_EVERY`` pivots and updated by elementary
(eta) transformations in between.

Cold solves use the primal method (phase 1 minimises the sum of
infeasibilities).  Reoptimisation after tightening bounds or appending rows
keeps the old basis dual feasible, so :meth:`SimplexState.optimize` runs the
dual method there and falls back to the primal one otherwise.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg.blas import dger as _dger

from .milp import EPS_FEAS, EPS_OPT, MAX, Constraint, MilpModel

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL_FAILURE = "numerical-failure"

REFACTOR_EVERY = 100
BLAND_AFTER = 1000
PIVOT_TOL = 1e-9
MAX_REPAIRS = 3


class NumericalFailure(RuntimeError):
    pass


@dataclass
class LpSolution:
    status: str
    x: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int = 0
    names: Sequence[str] = field(default=(), repr=False)
    row_names: Sequence[str] = field(default=(), repr=False)

    @property
    def primal(self) -> Dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.x)}

    @property
    def dual_map(self) -> Dict[str, float]:
        return {n: float(v) for n, v in zip(self.row_names, self.duals)}

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class SimplexState:
    """Basis, factorization and bound data of one LP.

    The state owns its arrays; use :meth:`copy` before branching.
    """

    def __init__(self, c, A, row_lo, row_hi, col_lo, col_hi, sense=1.0, names=(), row_names=()):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.n = n
        self.m = m
        self.A = A
        self.sense = sense
        self.names = list(names)
        self.row_names = list(row_names)
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.lo = np.concatenate([np.asarray(col_lo, dtype=float), np.asarray(row_lo, dtype=float)])
        self.hi = np.concatenate([np.asarray(col_hi, dtype=float), np.asarray(row_hi, dtype=float)])
        self.x = np.zeros(n + m)
        for j in range(n):
            self.x[j] = self._home_bound(j)
        self.basis = np.arange(n, n + m)
        self.Binv = -np.eye(m)
        self.updates = 0
        self.iterations = 0
        self._compute_basic()

    @classmethod
    def from_model(cls, model: MilpModel) -> "SimplexState":
        c, A, lo, hi, clo, chi = model.dense()
        return cls(c, A, lo, hi, clo, chi, sense=-1.0 if model.sense == MAX else 1.0,
                   names=model.var_names, row_names=[k.name for k in model.constraints])

    # -- bookkeeping --------------------------------------------------------
    @property
    def N(self) -> int:
        return self.n + self.m

    def copy(self, factor: bool = True) -> "SimplexState":
        """Independent copy; with ``factor=False`` the basis inverse is dropped
        and must be rebuilt by :meth:`refactor` before the copy is used."""
        new = object.__new__(SimplexState)
        new.__dict__.update(self.__dict__)
        for k in ("c", "lo", "hi", "x", "basis"):
            setattr(new, k, getattr(self, k).copy())
        new.Binv = self.Binv.copy() if factor else None
        # A is shared until rows are appended (append copies)
        return new

    def snapshot(self):
        """Basis and variable values, enough to resume later with :meth:`restore`."""
        return self.basis.copy(), self.x.copy()

    def restore(self, snap) -> None:
        """Reinstall a snapshot; rows appended since then get basic logicals."""
        basis, x = snap
        k = self.N - len(x)
        if k:
            basis = np.concatenate([basis, np.arange(self.N - k, self.N)])
            x = np.concatenate([x, np.zeros(k)])
        self.basis = basis.copy()
        self.x = x.copy()
        self.refactor()

    def reduced_costs(self) -> np.ndarray:
        """Reduced costs of the structural variables (minimisation form)."""
        return self._reduced(self._duals(self.c[self.basis]), self.c)[: self.n]

    def _home_bound(self, j: int) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if np.isfinite(lo) and np.isfinite(hi):
            return hi if self.c[j] < 0 else lo
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[j - self.n] = -1.0
        return col

    def _basis_matrix(self) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for k, j in enumerate(self.basis):
            if j < self.n:
                B[:, k] = self.A[:, j]
            else:
                B[j - self.n, k] = -1.0
        return B

    def _nonbasic_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.basis] = False
        return mask

    def _compute_basic(self) -> None:
        xn = self.x.copy()
        xn[self.basis] = 0.0
        r = self.A @ xn[: self.n] - xn[self.n:]
        self.x[self.basis] = -(self.Binv @ r)

    def refactor(self) -> None:
        """Rebuild the basis inverse from a fresh LU factorization."""
        for _ in range(MAX_REPAIRS + 1):
            B = self._basis_matrix()
            if self.m == 0:
                self.Binv = np.zeros((0, 0))
                break
            with warnings.catch_warnings():
                # singular bases are detected below and repaired
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
            diag = np.abs(np.diag(lu))
            if diag.min() > 1e-11 * max(1.0, diag.max()):
                self.Binv = np.ascontiguousarray(
                    scipy.linalg.lu_solve((lu, piv), np.eye(self.m), check_finite=False))
                break
            self._repair_basis(B)
        else:
            raise NumericalFailure("basis stays singular after repair")
        self.updates = 0
        self._compute_basic()

    def _repair_basis(self, B: np.ndarray) -> None:
        # keep a maximal independent subset of basic columns, complete with logicals
        _, r, perm = scipy.linalg.qr(B, pivoting=True, mode="economic")
        d = np.abs(np.diag(r))
        rank = int((d > 1e-9 * max(1.0, d.max())).sum())
        keep = sorted(perm[:rank])
        dropped = [self.basis[k] for k in perm[rank:]]
        Q = np.linalg.qr(B[:, keep])[0] if rank else np.zeros((self.m, 0))
        chosen: List[int] = []
        for _ in range(self.m - rank):
            resid = 1.0 - (Q * Q).sum(axis=1)
            if chosen:
                resid[chosen] = -1.0
            i = int(np.argmax(resid))
            chosen.append(i)
            e = np.zeros(self.m)
            e[i] = 1.0
            v = e - Q @ (Q.T @ e)
            Q = np.column_stack([Q, v / np.linalg.norm(v)])
        new_basis = [self.basis[k] for k in keep] + [self.n + i for i in chosen]
        for j in dropped:
            if j not in new_basis:
                lo, hi = self.lo[j], self.hi[j]
                self.x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
        log.debug("basis repair: replaced %d column(s)", len(dropped))
        self.basis = np.array(new_basis)

    def _pivot(self, r: int, j: int, alpha: np.ndarray) -> None:
        Binv = self.Binv
        row = Binv[r] / alpha[r]
        if Binv.flags.c_contiguous:
            # in-place rank-one update on the transposed (Fortran-ordered) view
            _dger(-1.0, row, alpha, a=Binv.T, overwrite_a=1)
        else:
            Binv -= np.outer(alpha, row)
        Binv[r] = row
        self.basis[r] = j
        self.updates += 1
        if self.updates >= REFACTOR_EVERY:
            self.refactor()

    def _duals(self, cB: np.ndarray) -> np.ndarray:
        return self.Binv.T @ cB

    def _reduced(self, y: np.ndarray, cost: np.ndarray) -> np.ndarray:
        d = np.empty(self.N)
        d[: self.n] = cost[: self.n] - self.A.T @ y
        d[self.n:] = cost[self.n:] + y
        d[self.basis] = 0.0
        return d

    # -- modification -------------------------------------------------------
    def set_bounds(self, j: int, lo: float, hi: float) -> None:
        """Change the bounds of structural variable ``j``."""
        self.lo[j], self.hi[j] = lo, hi
        if j in set(self.basis.tolist()):
            return
        old = self.x[j]
        if old == lo or old == hi:
            return
        if old < lo or not np.isfinite(old):
            self.x[j] = lo if np.isfinite(lo) else self._home_bound(j)
        elif old > hi:
            self.x[j] = hi if np.isfinite(hi) else self._home_bound(j)
        else:
            self.x[j] = self._home_bound(j)

    def set_all_bounds(self, lo: np.ndarray, hi: np.ndarray) -> None:
        for j in np.nonzero((lo != self.lo[: self.n]) | (hi != self.hi[: self.n]))[0]:
            self.set_bounds(int(j), float(lo[j]), float(hi[j]))
        self._compute_basic()

    def set_objective(self, c: np.ndarray) -> None:
        self.c[: self.n] = c

    def add_rows(self, rows: np.ndarray, lo: np.ndarray, hi: np.ndarray, names: Iterable[str] = ()) -> None:
        """Append rows with their logicals basic (keeps dual feasibility)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        k = rows.shape[0]
        if k == 0:
            return
        m, n = self.m, self.n
        self.A = np.vstack([self.A, rows])
        RB = np.zeros((k, m))
        for p, j in enumerate(self.basis):
            if j < n:
                RB[:, p] = rows[:, j]
        Binv = np.zeros((m + k, m + k))
        Binv[:m, :m] = self.Binv
        Binv[m:, :m] = RB @ self.Binv
        Binv[m:, m:] = -np.eye(k)
        self.Binv = Binv
        self.c = np.concatenate([self.c, np.zeros(k)])
        self.lo = np.concatenate([self.lo, np.asarray(lo, dtype=float)])
        self.hi = np.concatenate([self.hi, np.asarray(hi, dtype=float)])
        self.x = np.concatenate([self.x, np.zeros(k)])
        self.basis = np.concatenate([self.basis, np.arange(n + m, n + m + k)])
        self.m = m + k
        names = list(names)
        self.row_names += names + [f"row{m + t}" for t in range(len(names), k)]
        self._compute_basic()

    # -- status -------------------------------------------------------------
    def _primal_infeasibility(self) -> np.ndarray:
        xb = self.x[self.basis]
        return np.maximum(self.lo[self.basis] - xb, 0) + np.maximum(xb - self.hi[self.basis], 0)

    def _dual_feasible(self, d: np.ndarray) -> bool:
        nb = self._nonbasic_mask()
        x, lo, hi = self.x, self.lo, self.hi
        can_inc = nb & (x < hi)
        can_dec = nb & (x > lo)
        return not (((d < -EPS_OPT) & can_inc) | ((d > EPS_OPT) & can_dec)).any()

    def solution(self, status: str) -> LpSolution:
        x = self.x[: self.n].copy()
        y = self._duals(self.c[self.basis]) if self.m else np.zeros(0)
        obj = float(self.c[: self.n] @ x) * self.sense
        return LpSolution(status, x, y * self.sense, obj, self.iterations, self.names, self.row_names)

    # -- algorithms ---------------------------------------------------------
    def optimize(self, max_iter: Optional[int] = None) -> LpSolution:
        """Reoptimize from the current basis."""
        if max_iter is None:
            max_iter = 50 * (self.N + 10)
        try:
            if self.updates:
                self._compute_basic()
            if self._primal_infeasibility().max(initial=0.0) <= EPS_FEAS:
                status = self._primal(max_iter)
            else:
                d = self._reduced(self._duals(self.c[self.basis]), self.c)
                if self._dual_feasible(d):
                    status = self._dual(max_iter)
                else:
                    status = self._primal(max_iter)
        except (NumericalFailure, np.linalg.LinAlgError, ValueError) as exc:
            log.warning("simplex numerical failure: %s", exc)
            status = NUMERICAL_FAILURE
        return self.solution(status)

    def _primal(self, max_iter: int) -> str:
        n, N = self.n, self.N
        bland = False
        stall = 0
        repairs = 0
        last_obj = np.inf
        for _ in range(max_iter):
            self.iterations += 1
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            below = xb < lb - EPS_FEAS
            above = xb > ub + EPS_FEAS
            phase1 = bool(below.any() or above.any())
            if phase1:
                cB = above.astype(float) - below.astype(float)
                cost = np.zeros(N)
                obj = float(np.where(below, lb - xb, 0.0).sum() + np.where(above, xb - ub, 0.0).sum())
            else:
                cB = self.c[self.basis]
                cost = self.c
                obj = float(self.c @ self.x)
            y = self._duals(cB)
            d = self._reduced(y, cost)
            nb = self._nonbasic_mask()
            can_inc = nb & (self.x < self.hi)
            can_dec = nb & (self.x > self.lo)
            cand = ((d < -EPS_OPT) & can_inc) | ((d > EPS_OPT) & can_dec)
            if obj < last_obj - 1e-12:
                stall = 0
                last_obj = obj
            else:
                stall += 1
                if stall >= BLAND_AFTER and not bland:
                    log.debug("primal simplex stalled; switching to Bland's rule")
                    bland = True
            if not cand.any():
                if phase1:
                    if self.updates and repairs < 2:
                        # confirm with a fresh factorization before declaring infeasibility
                        repairs += 1
                        self.refactor()
                        continue
                    return INFEASIBLE
                return OPTIMAL
            idx = np.flatnonzero(cand)
            j = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            sigma = 1.0 if d[j] < 0 else -1.0
            alpha = self.Binv @ self._column(j)
            rate = -sigma * alpha
            t_best = self.hi[j] - self.lo[j]
            r_best = -1
            usable = np.abs(alpha) > PIVOT_TOL
            up = usable & (rate > 0)
            down = usable & (rate < 0)
            inside = ~below & ~above
            target = np.full(self.m, np.nan)
            target[up & below] = lb[up & below]
            target[up & inside] = ub[up & inside]
            target[down & above] = ub[down & above]
            target[down & inside] = lb[down & inside]
            limited = np.isfinite(target)
            if limited.any():
                rows = np.flatnonzero(limited)
                steps = np.maximum((target[rows] - xb[rows]) / rate[rows], 0.0)
                t_min = steps.min()
                if t_min < t_best - 1e-12:
                    ties = rows[steps <= t_min + 1e-12]
                    r_best = int(ties[np.argmin(self.basis[ties])])
                    t_best = t_min
                    target_best = target[r_best]
            if not np.isfinite(t_best):
                if phase1:
                    raise NumericalFailure("unbounded ray in phase 1")
                return UNBOUNDED
            self.x[j] += sigma * t_best
            self.x[self.basis] += rate * t_best
            if r_best < 0:
                # bound flip of the entering variable
                self.x[j] = self.hi[j] if sigma > 0 else self.lo[j]
                continue
            leaving = self.basis[r_best]
            self.x[leaving] = target_best
            self._pivot(r_best, j, alpha)
        return ITERATION_LIMIT

    def _dual(self, max_iter: int) -> str:
        n = self.n
        d = None  # reduced costs, updated along with the basis
        stall = 0
        bland = False
        last_obj = -np.inf
        repairs = 0
        for _ in range(max_iter):
            self.iterations += 1
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            infeas = np.maximum(lb - xb, 0) + np.maximum(xb - ub, 0)
            bad = infeas > EPS_FEAS
            if not bad.any():
                d = self._reduced(self._duals(self.c[self.basis]), self.c)
                if self._dual_feasible(d):
                    return OPTIMAL
                return self._primal(max_iter)
            r = int(np.flatnonzero(bad)[0]) if bland else int(np.argmax(infeas))
            to_lower = xb[r] < lb[r]
            target = lb[r] if to_lower else ub[r]
            rho = self.Binv[r]
            arow = np.empty(self.N)
            arow[:n] = self.A.T @ rho
            arow[n:] = -rho
            if d is None or self.updates == 0:
                d = self._reduced(self._duals(self.c[self.basis]), self.c)
            obj = float(self.c @ self.x)
            if obj > last_obj + 1e-12:
                stall, last_obj = 0, obj
            else:
                stall += 1
                if stall >= BLAND_AFTER:
                    bland = True
            nb = self._nonbasic_mask()
            can_inc = nb & (self.x < self.hi)
            can_dec = nb & (self.x > self.lo)
            # x_Br moves by -arow_j * delta_j; it must move towards the violated bound
            want = 1.0 if to_lower else -1.0
            inc_ok = can_inc & (-arow * want > PIVOT_TOL)
            dec_ok = can_dec & (arow * want > PIVOT_TOL)
            ok = inc_ok | dec_ok
            if not ok.any():
                if self.updates and repairs < 2:
                    repairs += 1
                    self.refactor()
                    continue
                return INFEASIBLE
            idx = np.flatnonzero(ok)
            ratios = np.abs(d[idx]) / np.abs(arow[idx])
            if bland:
                best = ratios.min()
                j = int(idx[np.flatnonzero(ratios <= best + 1e-12)[0]])
            else:
                # among near-ties prefer the largest pivot for stability
                best = ratios.min()
                near = np.flatnonzero(ratios <= best + 1e-9)
                j = int(idx[near[np.argmax(np.abs(arow[idx[near]]))]])
            alpha = self.Binv @ self._column(j)
            if abs(alpha[r]) <= PIVOT_TOL:
                self.refactor()
                continue
            delta = (xb[r] - target) / alpha[r]
            self.x[j] += delta
            self.x[self.basis] -= delta * alpha
            leaving = self.basis[r]
            self.x[leaving] = target
            d -= (d[j] / arow[j]) * arow
            self._pivot(r, j, alpha)
            d[self.basis] = 0.0
        return ITERATION_LIMIT


def solve_lp(model: MilpModel, warm: Optional[SimplexState] = None, max_iter: Optional[int] = None):
    """Solve the LP relaxation of ``model``; returns ``(LpSolution, SimplexState)``.

    ``warm`` may be the state of an earlier solve of a model with the same
    shape (for instance after changing the objective); its basis is reused.
    """
    state = SimplexState.from_model(model)
    if warm is not None and warm.n == state.n and warm.m == state.m:
        state.basis = warm.basis.copy()
        for j in range(state.N):
            if j in set(state.basis.tolist()):
                continue
            w = warm.x[j]
            if w == warm.lo[j] and np.isfinite(state.lo[j]):
                state.x[j] = state.lo[j]
            elif w == warm.hi[j] and np.isfinite(state.hi[j]):
                state.x[j] = state.hi[j]
            else:
                state.x[j] = state._home_bound(j)
        state.refactor()
    return state.optimize(max_iter), state


def constraint_rows(state: SimplexState, constraints: Sequence[Constraint]):
    rows = np.zeros((len(constraints), state.n))
    lo = np.full(len(constraints), -np.inf)
    hi = np.full(len(constraints), np.inf)
    for k, con in enumerate(constraints):
        for j, a in con.row:
            rows[k, j] += a
        if con.sense in (">=", "="):
            lo[k] = con.rhs
        if con.sense in ("<=", "="):
            hi[k] = con.rhs
    return rows, lo, hi


def reoptimize_with_rows(state: SimplexState, new_constraints: Sequence[Constraint]):
    """Append ``new_constraints`` to a solved state and reoptimize in place."""
    rows, lo, hi = constraint_rows(state, new_constraints)
    state.add_rows(rows, lo, hi, [c.name for c in new_constraints])
    return state.optimize(), state
