"""Dense-tableau bounded-variable primal simplex.

Solves ``min c^T x  s.t.  A x (<=,=,>=) b,  lower <= x <= upper`` with
finite lower bounds. Slack columns are added for inequality rows, artificial
columns only for rows whose slack cannot start basic. Phase 1 minimises the
artificial sum; phase 2 fixes artificials at zero and minimises ``c``.

Pricing is Dantzig's rule with a switch to Bland's rule after a run of
degenerate pivots; the ratio test is a two-pass Harris test. Rank-one tableau
updates go through BLAS ``dger`` on a Fortran-ordered tableau.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dger

LE, EQ, GE = -1, 0, 1

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
TIME_LIMIT = "time_limit"


@dataclass
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray  # LE / EQ / GE per row
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    value: float
    iterations: int


class _Tableau:
    def __init__(self, T, basis, x, lo, hi, tol):
        self.T = T  # m x (N + 1), last column is B^-1 b
        self.basis = basis
        self.x = x
        self.lo = lo
        self.hi = hi
        self.tol = tol
        m, cols = T.shape
        self.N = cols - 1
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[basis] = True

    def refresh_basic_values(self):
        nb = ~self.is_basic
        self.x[self.basis] = self.T[:, -1] - self.T[:, :-1][:, nb] @ self.x[nb]

    def pivot(self, r, j):
        T = self.T
        piv = T[r, j]
        row = T[r, :] / piv
        col = T[:, j].copy()
        col[r] = 0.0
        self.T = dger(-1.0, col, row, a=T, overwrite_a=1)
        self.T[r, :] = row
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.basis[r] = j
        return leaving


def _iterate(tab: _Tableau, cost: np.ndarray, max_iter: int, deadline: float | None,
             stall_limit: int = 30) -> tuple[str, int]:
    tol = tab.tol
    m = len(tab.basis)
    d = cost - cost[tab.basis] @ tab.T[:, :-1]
    degenerate_run = 0
    it = 0
    while True:
        if it >= max_iter:
            return ITERATION_LIMIT, it
        if deadline is not None and it % 16 == 0 and time.monotonic() > deadline:
            return TIME_LIMIT, it
        if it % 64 == 63:
            d = cost - cost[tab.basis] @ tab.T[:, :-1]
            tab.refresh_basic_values()
        x, lo, hi = tab.x, tab.lo, tab.hi
        movable = (~tab.is_basic) & (hi - lo > tol)
        at_upper = movable & (x >= hi - tol)
        score = np.where(movable & ~at_upper, -d, 0.0)
        score = np.where(at_upper, d, score)
        eligible = np.flatnonzero(score > tol)
        if eligible.size == 0:
            return OPTIMAL, it
        if degenerate_run > stall_limit:
            j = int(eligible[0])  # Bland
        else:
            j = int(eligible[np.argmax(score[eligible])])
        sigma = -1.0 if at_upper[j] else 1.0
        alpha = tab.T[:, j] * sigma  # basic values change by -t * alpha
        xb = x[tab.basis]
        lob, hib = lo[tab.basis], hi[tab.basis]
        dec = alpha > tol
        inc = alpha < -tol
        with np.errstate(divide="ignore", invalid="ignore"):
            # Harris pass 1: bounds relaxed by tol
            t1 = np.full(m, np.inf)
            t1[dec] = (xb[dec] - lob[dec] + tol) / alpha[dec]
            t1[inc] = (hib[inc] - xb[inc] + tol) / -alpha[inc]
            t_max = t1.min(initial=np.inf)
            t_flip = hi[j] - lo[j]
            if t_max == np.inf and t_flip == np.inf:
                return UNBOUNDED, it
            if t_flip <= t_max:
                # bound flip of the entering variable
                x[j] += sigma * t_flip
                x[tab.basis] = xb - t_flip * alpha
                degenerate_run = 0
                it += 1
                continue
            t2 = np.full(m, np.inf)
            t2[dec] = (xb[dec] - lob[dec]) / alpha[dec]
            t2[inc] = (hib[inc] - xb[inc]) / -alpha[inc]
        candidates = np.flatnonzero(t2 <= t_max)
        if degenerate_run > stall_limit:
            r = int(candidates[np.argmin(tab.basis[candidates])])
        else:
            r = int(candidates[np.argmax(np.abs(alpha[candidates]))])
        t = max(t2[r], 0.0)
        leaving = tab.basis[r]
        to_lower = alpha[r] > 0
        x[tab.basis] = xb - t * alpha
        x[j] += sigma * t
        tab.pivot(r, j)
        x[leaving] = lo[leaving] if to_lower else hi[leaving]
        d = d - d[j] * tab.T[r, :-1]
        degenerate_run = degenerate_run + 1 if t <= tol else 0
        it += 1


def solve_lp(lp: LinearProgram, *, tol: float = 1e-9, max_iter: int | None = None,
             deadline: float | None = None) -> LPResult:
    """Minimise ``lp.c @ x``; see module docstring for the method."""
    A = np.asarray(lp.A, dtype=np.float64)
    m, n = A.shape
    b = np.asarray(lp.b, dtype=np.float64)
    senses = np.asarray(lp.senses)
    lower = np.asarray(lp.lower, dtype=np.float64)
    upper = np.asarray(lp.upper, dtype=np.float64)
    if np.any(lower > upper + tol):
        return LPResult(INFEASIBLE, None, np.nan, 0)
    if not np.all(np.isfinite(lower)):
        raise ValueError("solve_lp requires finite lower bounds")
    upper = np.maximum(upper, lower)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    ineq = np.flatnonzero(senses != EQ)
    n_slack = ineq.size
    residual = b - A @ lower
    # slack sign: +1 for <= rows, -1 for >= rows
    slack_sign = np.where(senses[ineq] == LE, 1.0, -1.0)
    slack_value = residual[ineq] * slack_sign
    slack_ok = np.zeros(m, dtype=bool)
    slack_ok[ineq] = slack_value >= -tol
    art_rows = np.flatnonzero(~slack_ok)
    n_art = art_rows.size
    N = n + n_slack + n_art

    T = np.zeros((m, N + 1), order="F")
    T[:, :n] = A
    T[ineq, n + np.arange(n_slack)] = slack_sign
    art_sign = np.where(residual[art_rows] >= 0, 1.0, -1.0)
    T[art_rows, n + n_slack + np.arange(n_art)] = art_sign
    T[:, -1] = b

    basis = np.empty(m, dtype=np.intp)
    slack_col = np.full(m, -1)
    slack_col[ineq] = n + np.arange(n_slack)
    basis[slack_ok] = slack_col[slack_ok]
    basis[art_rows] = n + n_slack + np.arange(n_art)
    # B is diagonal with +-1 entries: B^-1 = B
    diag = T[np.arange(m), basis].copy()
    T /= diag[:, None]

    lo = np.concatenate([lower, np.zeros(n_slack + n_art)])
    hi = np.concatenate([upper, np.full(n_slack + n_art, np.inf)])
    x = lo.copy()
    tab = _Tableau(T, basis, x, lo, hi, tol)
    tab.refresh_basic_values()

    iterations = 0
    if n_art:
        cost1 = np.zeros(N)
        cost1[n + n_slack:] = 1.0
        status, it = _iterate(tab, cost1, max_iter, deadline)
        iterations += it
        if status != OPTIMAL:
            return LPResult(status, None, np.nan, iterations)
        tab.refresh_basic_values()
        infeasibility = tab.x[n + n_slack:].sum()
        if infeasibility > tol * 100 * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult(INFEASIBLE, None, np.nan, iterations)
        tab.hi[n + n_slack:] = 0.0
        tab.x[n + n_slack:] = np.clip(tab.x[n + n_slack:], 0.0, 0.0)

    cost2 = np.zeros(N)
    cost2[:n] = lp.c
    status, it = _iterate(tab, cost2, max_iter - iterations, deadline)
    iterations += it
    if status != OPTIMAL:
        return LPResult(status, None, np.nan, iterations)
    tab.refresh_basic_values()
    xs = np.clip(tab.x[:n], lower, upper)
    return LPResult(OPTIMAL, xs, float(lp.c @ xs), iterations)


def solve_lp_highs(lp: LinearProgram, *, deadline: float | None = None) -> LPResult:
    """Same contract as ``solve_lp``, delegated to HiGHS through scipy."""
    from scipy.optimize import linprog

    senses = np.asarray(lp.senses)
    A = np.asarray(lp.A, dtype=np.float64)
    b = np.asarray(lp.b, dtype=np.float64)
    ub_rows = np.concatenate([A[senses == LE], -A[senses == GE]])
    ub_rhs = np.concatenate([b[senses == LE], -b[senses == GE]])
    eq = senses == EQ
    options = {}
    if deadline is not None:
        options["time_limit"] = max(deadline - time.monotonic(), 1e-3)
    res = linprog(lp.c, A_ub=ub_rows if ub_rows.size else None, b_ub=ub_rhs if ub_rows.size else None,
                  A_eq=A[eq] if eq.any() else None, b_eq=b[eq] if eq.any() else None,
                  bounds=np.column_stack([lp.lower, lp.upper]), method="highs", options=options)
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status, ITERATION_LIMIT)
    if status == ITERATION_LIMIT and deadline is not None and time.monotonic() > deadline:
        status = TIME_LIMIT
    if status != OPTIMAL:
        return LPResult(status, None, np.nan, int(getattr(res, "nit", 0) or 0))
    return LPResult(OPTIMAL, res.x, float(res.fun), int(res.nit))
