"""Dense linear-program solver.

Two-phase tableau simplex: Dantzig pricing with a lexicographic leaving
rule for cycle-free degenerate pivoting, relative pivot-size guards, and
periodic refactorization of the tableau from the current basis to keep
round-off bounded. A `backend="highs"` option routes the same problem
through scipy's HiGHS for the large production instances; both backends
are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBreakdown

DEFAULT_FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10
# entries this small never become pivots: dividing a row by them would
# blow accumulated round-off up into the solution
MIN_PIVOT = 1e-6


@dataclass
class LinearProgram:
    """min c @ v  s.t.  A_eq v = b_eq,  A_ub v <= b_ub,  lo <= v <= hi."""

    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    lo: np.ndarray = None  # defaults to 0
    hi: np.ndarray = None  # defaults to +inf

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.n_vars
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        else:
            self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
            self.b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        if self.A_ub is None:
            self.A_ub = np.zeros((0, n))
            self.b_ub = np.zeros(0)
        else:
            self.A_ub = np.atleast_2d(np.asarray(self.A_ub, dtype=float))
            self.b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if self.A_eq.shape != (len(self.b_eq), n) or self.A_ub.shape != (len(self.b_ub), n):
            raise ValueError("inconsistent LP dimensions")
        if np.any(self.lo > self.hi):
            raise ValueError("lo > hi for some variable")
        for a in (self.c, self.A_eq, self.b_eq, self.A_ub, self.b_ub, self.lo):
            if not np.all(np.isfinite(a)):
                raise ValueError("non-finite LP coefficient")

    @property
    def n_vars(self):
        return len(self.c)

    def max_violation(self, v):
        """Largest constraint/bound violation at point v."""
        worst = 0.0
        if len(self.b_eq):
            worst = max(worst, float(np.max(np.abs(self.A_eq @ v - self.b_eq))))
        if len(self.b_ub):
            worst = max(worst, float(np.max(self.A_ub @ v - self.b_ub, initial=0.0)))
        worst = max(worst, float(np.max(self.lo - v, initial=0.0)))
        finite = np.isfinite(self.hi)
        if np.any(finite):
            worst = max(worst, float(np.max(v[finite] - self.hi[finite], initial=0.0)))
        return worst


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    v: np.ndarray = None
    objective: float = np.nan
    dual_objective: float = np.nan
    n_iter: int = 0
    max_violation: float = np.nan


def _pivot(T, basis, row, col):
    piv = T[row, col]
    if abs(piv) < PIVOT_TOL:
        raise NumericalBreakdown(f"pivot element {piv} below tolerance")
    T[row] /= piv
    colvals = T[:, col].copy()
    colvals[row] = 0.0
    T -= np.outer(colvals, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _make_refresh(A_ext, b, c_all):
    """Build a callback that recomputes the tableau exactly from the
    current basis, wiping the round-off accumulated by rank-one updates."""
    m = len(b)

    def refresh(T, basis):
        try:
            Binv = np.linalg.inv(A_ext[:, basis])
        except np.linalg.LinAlgError:
            raise NumericalBreakdown(
                "basis became singular; drift let a zero pivot through")
        T[:m, :-1] = Binv @ A_ext
        T[:m, -1] = Binv @ b
        cb = c_all[basis]
        T[-1, :-1] = c_all - cb @ T[:m, :-1]
        T[-1, -1] = -float(cb @ T[:m, -1])

    return refresh


def _run_simplex(T, basis, n_cols, max_iter, lex_cols=None, refresh=None,
                 refresh_every=100):
    """Minimize the objective stored in the last tableau row over the first
    n_cols columns. Returns (status, iterations).

    Dantzig pricing picks the entering column. The leaving row is the
    lexicographic minimum of the scaled candidate rows over lex_cols,
    which must read [rhs, B^{-1} block]: rows start lexico-positive there
    and stay so, which rules out cycling without Bland's crawl on heavily
    degenerate instances. Every refresh_every pivots (and once more before
    accepting optimality) the tableau is refactorized from scratch."""
    it = 0
    m = T.shape[0] - 1
    if lex_cols is None:
        lex_cols = np.arange(T.shape[1])
    verified = refresh is None
    while it < max_iter:
        if refresh is not None and it and it % refresh_every == 0:
            refresh(T, basis)
            verified = True
        z = T[-1, :n_cols]
        col = int(np.argmin(z))
        if z[col] >= -PIVOT_TOL:
            if not verified:
                refresh(T, basis)
                verified = True
                continue
            return "optimal", it
        colv = T[:m, col]
        # relative pivot guard: on badly scaled columns an absolute floor
        # lets structurally-zero entries (round-off at the column's scale)
        # become pivots and silently break the basis
        piv_tol = max(MIN_PIVOT, 1e-7 * float(np.max(np.abs(colv))))
        ok = colv > piv_tol
        if not np.any(ok):
            if np.any(colv > PIVOT_TOL):
                raise NumericalBreakdown(
                    "only near-singular pivots available in the ratio test")
            return "unbounded", it
        ratios = np.where(ok, T[:m, -1] / np.where(ok, colv, 1.0), np.inf)
        rmin = ratios.min()
        rows = np.flatnonzero(ratios <= rmin + PIVOT_TOL)
        row = int(rows[0])
        if len(rows) > 1:
            for r in rows[1:]:
                r = int(r)
                # first differing entry of the scaled rows decides
                dif = T[r, lex_cols] / colv[r] - T[row, lex_cols] / colv[row]
                nz = np.flatnonzero(np.abs(dif) > 1e-12)
                if len(nz) and dif[nz[0]] < 0:
                    row = r
        _pivot(T, basis, row, col)
        verified = refresh is None
        it += 1
    return "iteration_limit", it


def solve_lp(lp: LinearProgram, feas_tol: float = DEFAULT_FEAS_TOL,
             backend: str = "simplex") -> LpSolution:
    """Solve the LP. status='optimal' guarantees primal feasibility within
    feas_tol; 'infeasible' means the phase-1 optimum exceeded feas_tol."""
    if backend == "highs":
        return _solve_highs(lp, feas_tol)
    if backend != "simplex":
        raise ValueError(f"unknown backend {backend!r}")
    return _solve_simplex(lp, feas_tol)


def _solve_highs(lp: LinearProgram, feas_tol) -> LpSolution:
    from scipy.optimize import linprog
    from scipy.sparse import csc_matrix

    res = linprog(
        lp.c,
        A_ub=csc_matrix(lp.A_ub) if len(lp.b_ub) else None,
        b_ub=lp.b_ub if len(lp.b_ub) else None,
        A_eq=csc_matrix(lp.A_eq) if len(lp.b_eq) else None,
        b_eq=lp.b_eq if len(lp.b_eq) else None,
        bounds=list(zip(lp.lo, lp.hi)),
        method="highs",
        options={
            "primal_feasibility_tolerance": min(feas_tol, 1e-9),
            "dual_feasibility_tolerance": 1e-9,
        },
    )
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        return LpSolution(status="unbounded")
    if res.status != 0:
        raise NumericalBreakdown(f"HiGHS failure: {res.message}")
    v = np.asarray(res.x, dtype=float)
    dual = 0.0
    if len(lp.b_eq):
        dual += float(lp.b_eq @ res.eqlin.marginals)
    if len(lp.b_ub):
        dual += float(lp.b_ub @ res.ineqlin.marginals)
    dual += float(lp.lo @ res.lower.marginals)
    hi_fin = np.where(np.isfinite(lp.hi), lp.hi, 0.0)
    dual += float(hi_fin @ res.upper.marginals)
    return LpSolution(
        status="optimal", v=v, objective=float(lp.c @ v),
        dual_objective=dual, n_iter=int(getattr(res, "nit", 0)),
        max_violation=lp.max_violation(v),
    )


def _standard_form(lp: LinearProgram):
    """Shift to x = v - lo >= 0, turn finite upper bounds and inequalities
    into slack rows; returns (A, b, c, const, n_orig) with b >= 0."""
    if not np.all(np.isfinite(lp.lo)):
        raise ValueError("simplex backend requires finite lower bounds")
    n = lp.n_vars
    ub_rows = []
    ub_rhs = []
    for j in np.flatnonzero(np.isfinite(lp.hi)):
        row = np.zeros(n)
        row[j] = 1.0
        ub_rows.append(row)
        ub_rhs.append(lp.hi[j])
    A_ub = np.vstack([lp.A_ub] + ub_rows) if ub_rows else lp.A_ub
    b_ub = np.concatenate([lp.b_ub, ub_rhs]) if ub_rows else lp.b_ub

    b_eq = lp.b_eq - lp.A_eq @ lp.lo
    b_ub = b_ub - A_ub @ lp.lo

    m_eq, m_ub = len(b_eq), len(b_ub)
    A = np.zeros((m_eq + m_ub, n + m_ub))
    A[:m_eq, :n] = lp.A_eq
    A[m_eq:, :n] = A_ub
    A[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    c = np.concatenate([lp.c, np.zeros(m_ub)])
    return A, b, c, float(lp.c @ lp.lo), n


def _solve_simplex(lp: LinearProgram, feas_tol) -> LpSolution:
    A, b, c, const, n_orig = _standard_form(lp)
    m, n = A.shape
    max_iter = 50 * (m + n)

    # phase 1: artificial variables, minimize their sum
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    # lexicographic order: rhs first, then the artificial block (B^{-1})
    lex_cols = np.concatenate([[n + m], np.arange(n, n + m)])
    A_ext = np.hstack([A, np.eye(m)])
    c_art = np.concatenate([np.zeros(n), np.ones(m)])
    status, it1 = _run_simplex(T, basis, n + m, max_iter, lex_cols,
                               refresh=_make_refresh(A_ext, b, c_art))
    phase1 = -T[-1, -1]
    if status == "iteration_limit":
        return LpSolution(status="iteration_limit", n_iter=it1)
    if phase1 > feas_tol:
        return LpSolution(status="infeasible", n_iter=it1, objective=np.nan)

    # drive any residual artificials out of the basis
    for r in range(m):
        if basis[r] >= n:
            col = int(np.argmax(np.abs(T[r, :n])))
            if abs(T[r, col]) > MIN_PIVOT:
                _pivot(T, basis, r, col)
            # else the row is redundant; keep the artificial pinned at 0

    # phase 2 on the original objective. The artificial columns stay in
    # the tableau (pricing is limited to the first n columns): they carry
    # B^{-1}, which the lexicographic ratio test needs to stay cycle-free.
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r in range(m):
        if basis[r] < n:
            T[-1] -= c[basis[r]] * T[r]
    c_full = np.concatenate([c, np.zeros(m)])
    status, it2 = _run_simplex(T, basis, n, max_iter, lex_cols,
                               refresh=_make_refresh(A_ext, b, c_full))
    # rebuild the basic solution from a fresh factorization; hundreds of
    # dense rank-one tableau updates can drift
    x = np.zeros(n)
    B = np.zeros((m, m))
    for i in range(m):
        col = basis[i]
        B[:, i] = A[:, col] if col < n else np.eye(m)[:, col - n]
    try:
        xb = np.linalg.solve(B, b)
        for i in range(m):
            if basis[i] < n:
                x[basis[i]] = max(xb[i], 0.0)
    except np.linalg.LinAlgError:
        for r in range(m):
            if basis[r] < n:
                x[basis[r]] = T[r, -1]
    v = x[:n_orig] + lp.lo
    obj = float(lp.c @ v)

    # dual certificate y = c_B B^{-1} from the final basis (standard form
    # min c x, A x = b, x >= 0 whose dual is max y b s.t. A^T y <= c)
    dual = np.nan
    if status == "optimal":
        # redundant rows (pinned artificials) take dual value 0
        live = [r for r in range(m) if basis[r] < n]
        cols = [basis[r] for r in live]
        try:
            y = np.linalg.solve(A[np.ix_(live, cols)].T, c[cols])
            dual = float(y @ b[live]) + const
        except np.linalg.LinAlgError:
            dual = obj
    return LpSolution(
        status=status, v=v, objective=obj, dual_objective=dual,
        n_iter=it1 + it2, max_violation=lp.max_violation(v),
    )
