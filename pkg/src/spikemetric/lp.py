"""Dense two-phase simplex for the small LPs produced by per-row subproblems.

Problem sizes here are a few hundred variables at most, so a dense tableau is
plenty.  Pivoting uses Dantzig's rule and falls back to Bland's rule when the
objective stalls, which guarantees termination on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBreakdown

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-9
_MAX_ITERS = 100_000
_REFACTOR_EVERY = 100


@dataclass
class LinearProgram:
    """minimize c @ x  s.t.  a_ub @ x <= b_ub,  a_eq @ x = b_eq, lower <= x <= upper.

    Bounds default to x >= 0; use -inf/+inf entries for free or one-sided
    variables.
    """

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        if self.a_ub is not None:
            self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
            self.b_ub = np.asarray(self.b_ub, dtype=float).reshape(-1)
        if self.a_eq is not None:
            self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
            self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.lower = (np.zeros(n) if self.lower is None
                      else np.asarray(self.lower, dtype=float).reshape(-1))
        self.upper = (np.full(n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=float).reshape(-1))
        for arr in (self.c, self.a_ub, self.b_ub, self.a_eq, self.b_eq):
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")

    @property
    def n_vars(self):
        return len(self.c)


@dataclass
class LpSolution:
    status: str  # Optimal | Infeasible | Unbounded
    x: np.ndarray | None = None
    value: float = np.nan
    residual: float = 0.0
    iterations: int = 0


def _to_standard_form(lp: LinearProgram):
    """Rewrite with all variables >= 0; returns (c, A_ub, b_ub, A_eq, b_eq, back).

    back maps a standard-form solution vector to original variables.
    """
    n = lp.n_vars
    cols = []  # per original var: ('shift', std_col, l) | ('neg', std_col, u) | ('free', p, m)
    n_std = 0
    for v in range(n):
        l, u = lp.lower[v], lp.upper[v]
        if l > u:
            return None  # trivially infeasible bounds
        if np.isfinite(l):
            cols.append(("shift", n_std, l))
            n_std += 1
        elif np.isfinite(u):
            cols.append(("neg", n_std, u))
            n_std += 1
        else:
            cols.append(("free", n_std, n_std + 1))
            n_std += 2

    def expand(a_orig, b_orig):
        """Rewrite rows a_orig @ x (<=|=) b_orig in standard-form variables."""
        if a_orig is None:
            return np.empty((0, n_std)), np.empty(0)
        m = a_orig.shape[0]
        a = np.zeros((m, n_std))
        b = b_orig.astype(float).copy()
        for v, spec in enumerate(cols):
            col = a_orig[:, v]
            if spec[0] == "shift":
                a[:, spec[1]] = col
                b -= col * spec[2]
            elif spec[0] == "neg":
                a[:, spec[1]] = -col
                b -= col * spec[2]
            else:
                a[:, spec[1]] = col
                a[:, spec[2]] = -col
        return a, b

    c = np.zeros(n_std)
    for v, spec in enumerate(cols):
        if spec[0] == "shift":
            c[spec[1]] = lp.c[v]
        elif spec[0] == "neg":
            c[spec[1]] = -lp.c[v]
        else:
            c[spec[1]] = lp.c[v]
            c[spec[2]] = -lp.c[v]

    a_ub, b_ub = expand(lp.a_ub, lp.b_ub)
    a_eq, b_eq = expand(lp.a_eq, lp.b_eq)

    # finite upper bounds on shifted variables become extra <= rows
    extra_rows, extra_rhs = [], []
    for v, spec in enumerate(cols):
        if spec[0] == "shift" and np.isfinite(lp.upper[v]):
            row = np.zeros(n_std)
            row[spec[1]] = 1.0
            extra_rows.append(row)
            extra_rhs.append(lp.upper[v] - lp.lower[v])
        elif spec[0] == "neg" and np.isfinite(lp.lower[v]):
            row = np.zeros(n_std)
            row[spec[1]] = 1.0
            extra_rows.append(row)
            extra_rhs.append(lp.upper[v] - lp.lower[v])
    if extra_rows:
        a_ub = np.vstack([a_ub, np.array(extra_rows)])
        b_ub = np.concatenate([b_ub, np.array(extra_rhs)])

    def back(x_std):
        x = np.zeros(n)
        for v, spec in enumerate(cols):
            if spec[0] == "shift":
                x[v] = spec[2] + x_std[spec[1]]
            elif spec[0] == "neg":
                x[v] = spec[2] - x_std[spec[1]]
            else:
                x[v] = x_std[spec[1]] - x_std[spec[2]]
        return x

    return c, a_ub, b_ub, a_eq, b_eq, back


def _equilibrate(c, a_ub, b_ub, a_eq, b_eq, n_passes=5):
    """Ruiz row/column equilibration of the stacked constraint matrix.

    The row LPs built upstream mix coefficients spanning ~8 orders of
    magnitude; balancing both rows and columns keeps simplex pivots away from
    the roundoff floor.  Returns scaled copies plus the column scale needed to
    map solutions back (x = x_scaled / col_scale).
    """
    m_ub, m_eq = len(b_ub), len(b_eq)
    n = len(c)
    a = np.vstack([a_ub, a_eq]) if m_eq else a_ub.copy()
    b = np.concatenate([b_ub, b_eq]) if m_eq else b_ub.copy()
    col_scale = np.ones(n)
    if a.shape[0]:
        for _ in range(n_passes):
            r = np.sqrt(np.max(np.abs(a), axis=1))
            r[r == 0.0] = 1.0
            a /= r[:, None]
            b /= r
            s = np.sqrt(np.max(np.abs(a), axis=0))
            s[s == 0.0] = 1.0
            a /= s[None, :]
            col_scale *= s
    return (c / col_scale, a[:m_ub], b[:m_ub], a[m_ub:], b[m_ub:], col_scale)


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _refactor(tableau, basis, a0, b0, cvec):
    """Rebuild the tableau from pristine data under the current basis.

    Pivoting accumulates round-off multiplicatively; re-solving B^-1 [A | b]
    directly resets that drift.  Returns False if the basis matrix is too
    ill-conditioned to factor.
    """
    m = len(basis)
    idx = np.asarray(basis)
    try:
        binv = np.linalg.solve(a0[:, idx], np.column_stack([a0, b0]))
        y = np.linalg.solve(a0[:, idx].T, cvec[idx])
    except np.linalg.LinAlgError:
        return False
    if not (np.all(np.isfinite(binv)) and np.all(np.isfinite(y))):
        return False
    tableau[:m, :-1] = binv[:, :-1]
    tableau[:m, -1] = binv[:, -1]
    tableau[-1, :-1] = cvec - y @ a0
    tableau[-1, -1] = -float(cvec[idx] @ binv[:, -1])
    return True


def _dual_restore(tableau, basis, n_cols, allowed):
    """Dual simplex steps to clear negative basics once reduced costs are >= 0.

    Returns True if primal feasibility was restored.
    """
    m = tableau.shape[0] - 1
    for _ in range(5000):
        rhs = tableau[:m, -1]
        r = int(np.argmin(rhs))
        if rhs[r] >= -_FEAS_TOL:
            return True
        rowvals = tableau[r, :n_cols]
        elig = np.flatnonzero((rowvals < -_PIVOT_TOL) & allowed)
        if len(elig) == 0:
            return False
        ratios = tableau[-1, elig] / (-rowvals[elig])
        best = np.min(ratios)
        tied = elig[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
        col = tied[int(np.argmax(-rowvals[tied]))]
        _pivot(tableau, basis, r, int(col))
    return False


def _finish(tableau, basis, n_cols, allowed, a0, b0, cvec):
    """Clean up an apparently-optimal basis: clear negative basics.

    Returns True if dual steps changed the basis and reduced costs turned
    negative again, meaning the primal loop must resume.
    """
    m = tableau.shape[0] - 1
    if np.min(tableau[:m, -1]) >= -_FEAS_TOL:
        return False
    # round-off can leave the basis dual feasible but with negative basics;
    # dual steps walk back to a primal-feasible vertex.  A drifting tableau
    # can under-report the infeasibility, so alternate dual passes with exact
    # refactorizations until the clean basis is truly feasible.
    resume = False
    for _ in range(10):
        if not _dual_restore(tableau, basis, n_cols, allowed):
            break
        if not _refactor(tableau, basis, a0, b0, cvec):
            break
        resume = bool(np.any((tableau[-1, :n_cols] < -_PIVOT_TOL) & allowed))
        if np.min(tableau[:m, -1]) >= -_FEAS_TOL:
            break
    return resume


def _run_simplex(tableau, basis, n_cols, allowed, a0, b0, cvec):
    """Iterate the tableau (objective in the last row) to optimality.

    Returns (status, iterations).  `allowed` masks columns eligible to enter;
    (a0, b0, cvec) hold the pristine constraint system for refactorization.
    """
    m = tableau.shape[0] - 1
    bland = False
    stall = 0
    restarts = 3  # budget for resuming after a stalled-but-infeasible accept
    fresh = False  # tableau rebuilt since the last pivot
    last_obj = tableau[-1, -1]
    for it in range(_MAX_ITERS):
        if it and it % _REFACTOR_EVERY == 0 and not fresh:
            fresh = _refactor(tableau, basis, a0, b0, cvec)
        obj = tableau[-1, :n_cols]
        candidates = np.flatnonzero((obj < -_PIVOT_TOL) & allowed)
        if len(candidates) == 0:
            # confirm on a clean tableau before declaring optimality
            if not fresh and _refactor(tableau, basis, a0, b0, cvec):
                fresh = True
                if np.any((tableau[-1, :n_cols] < -_PIVOT_TOL) & allowed):
                    continue
            if _finish(tableau, basis, n_cols, allowed, a0, b0, cvec):
                continue
            return "optimal", it
        if not bland:
            candidates = candidates[np.argsort(obj[candidates], kind="stable")]
        # take the best-priced column whose ratio test lands on a healthy
        # pivot; dividing a row by a near-tolerance element inflates the
        # tableau and wrecks the solve.  Only when every improving column
        # lacks a positive entry is the problem unbounded.
        col = row = fallback = None
        for cand in candidates:
            colvals = tableau[:m, cand]
            positive = colvals > _PIVOT_TOL
            if not positive.any():
                continue
            ratios = np.full(m, np.inf)
            # clamp slightly-negative basics at zero so drifted rows give a
            # degenerate pivot rather than a negative (bogus) ratio
            rhs = np.maximum(tableau[:m, -1], 0.0)
            ratios[positive] = rhs[positive] / colvals[positive]
            best = np.min(ratios)
            tied = np.flatnonzero(ratios <= best + _PIVOT_TOL * max(1.0, abs(best)))
            if bland:
                cand_row = tied[np.argmin(np.asarray(basis)[tied])]  # anti-cycling
            else:
                cand_row = tied[np.argmax(colvals[tied])]  # largest pivot
            if colvals[cand_row] >= 1e-7 * max(1.0, float(np.max(np.abs(colvals)))):
                col, row = cand, cand_row
                break
            if fallback is None:
                fallback = (cand, cand_row)
        if col is None:
            # never trust an unbounded verdict (or a desperate tiny pivot)
            # from a drifted tableau
            if not fresh and _refactor(tableau, basis, a0, b0, cvec):
                fresh = True
                continue
            if fallback is None:
                return "unbounded", it
            col, row = fallback
        _pivot(tableau, basis, row, col)
        fresh = False
        if np.max(np.abs(tableau)) > 1e9:
            fresh = _refactor(tableau, basis, a0, b0, cvec)
        if tableau[-1, -1] > last_obj + 1e-12:
            last_obj = tableau[-1, -1]
            stall = 0
        else:
            stall += 1
            if stall > 2 * (m + n_cols):
                bland = True  # degeneracy: anti-cycling mode
            if stall > 6 * (m + n_cols):
                # the pivot-quality filter voids Bland's termination
                # guarantee, so a near-singular basis can cycle at the
                # optimum with roundoff-level negative reduced costs; accept
                # the vertex (the caller validates the solution residual)
                _refactor(tableau, basis, a0, b0, cvec)
                if restarts and _finish(tableau, basis, n_cols, allowed, a0, b0, cvec):
                    # the accepted vertex was not even feasible; the cleanup
                    # moved the basis, so give the primal loop another run
                    restarts -= 1
                    bland = False
                    stall = 0
                    last_obj = tableau[-1, -1]
                    continue
                return "optimal", it
    raise NumericalBreakdown("simplex iteration cap exceeded")


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Two-phase dense simplex.

    Returns status Optimal (with x and value), Infeasible or Unbounded; raises
    NumericalBreakdown if the tableau degrades beyond the feasibility
    tolerance.
    """
    std = _to_standard_form(lp)
    if std is None:
        return LpSolution(status="Infeasible")
    c, a_ub, b_ub, a_eq, b_eq, back_vars = std
    c, a_ub, b_ub, a_eq, b_eq, col_scale = _equilibrate(c, a_ub, b_ub, a_eq, b_eq)

    def back(x_std):
        return back_vars(x_std / col_scale)
    n = len(c)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    if m == 0:
        # only bounds: bounded iff all costs nonnegative (vars sit at 0)
        if np.any(c < -_PIVOT_TOL):
            return LpSolution(status="Unbounded")
        x = back(np.zeros(n))
        return LpSolution(status="Optimal", x=x, value=float(lp.c @ x))

    # columns: [x (n)] [slacks (m_ub)] [artificials (m)]
    n_slack = m_ub
    total = n + n_slack + m
    tableau = np.zeros((m + 1, total + 1))
    basis = [0] * m
    art_cols = list(range(n + n_slack, total))

    a_all = np.vstack([a_ub, a_eq]) if m_eq else a_ub
    b_all = np.concatenate([b_ub, b_eq]) if m_eq else b_ub
    tableau[:m, :n] = a_all
    for r in range(m_ub):
        tableau[r, n + r] = 1.0
    for r in range(m):
        if b_all[r] < 0:
            tableau[r, : n + n_slack] *= -1.0
            b_all = b_all.copy()
            b_all[r] *= -1.0
        tableau[r, -1] = b_all[r]

    # artificial basis everywhere; rows whose slack is +1 could reuse the
    # slack, but a uniform start keeps the bookkeeping simple at this scale
    n_iters = 0
    for r in range(m):
        slack_ok = r < m_ub and tableau[r, n + r] == 1.0
        if slack_ok:
            basis[r] = n + r
            tableau[r, art_cols[r]] = 0.0
        else:
            basis[r] = art_cols[r]
            tableau[r, art_cols[r]] = 1.0

    # pristine copy of the constraint system for post-solve refinement
    a0 = tableau[:m, :total].copy()
    b0 = b_all.copy()

    # phase 1: minimize the artificial sum
    if any(b >= n + n_slack for b in basis):
        for col in art_cols:
            tableau[-1, col] = 1.0
        for r in range(m):
            if basis[r] >= n + n_slack:
                tableau[-1] -= tableau[r]
        allowed = np.ones(total, dtype=bool)
        c_phase1 = np.zeros(total)
        c_phase1[art_cols] = 1.0
        status, it1 = _run_simplex(tableau, basis, total, allowed, a0, b0, c_phase1)
        n_iters += it1
        # bottom-right holds -z; the artificial sum is bounded below by zero,
        # so an "unbounded" verdict with z at numerical zero just means
        # round-off pushed the objective past feasibility
        z = -tableau[-1, -1]
        feas_tol = 1e-7 * max(1.0, np.max(np.abs(b_all)))
        if status != "optimal" and not (status == "unbounded" and z <= feas_tol):
            raise NumericalBreakdown("phase-1 simplex failed")
        if z > feas_tol:
            return LpSolution(status="Infeasible", iterations=n_iters)
        # drive surviving artificials out of the basis
        drop_rows = []
        for r in range(m):
            if basis[r] >= n + n_slack:
                pivot_col = None
                for col in range(n + n_slack):
                    if abs(tableau[r, col]) > _PIVOT_TOL:
                        pivot_col = col
                        break
                if pivot_col is None:
                    drop_rows.append(r)
                else:
                    _pivot(tableau, basis, r, pivot_col)
        if drop_rows:
            keep = [r for r in range(m) if r not in drop_rows]
            tableau = np.vstack([tableau[keep], tableau[-1:]])
            basis = [basis[r] for r in keep]
            a0, b0 = a0[keep], b0[keep]
            m = len(basis)

    # phase 2: original objective over non-artificial columns
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    for r in range(m):
        if tableau[-1, basis[r]] != 0.0:
            tableau[-1] -= tableau[-1, basis[r]] * tableau[r]
    allowed = np.zeros(total, dtype=bool)
    allowed[: n + n_slack] = True
    c_phase2 = np.zeros(total)
    c_phase2[:n] = c
    status, it2 = _run_simplex(tableau, basis, total, allowed, a0, b0, c_phase2)
    n_iters += it2
    if status == "unbounded":
        return LpSolution(status="Unbounded", iterations=n_iters)

    x_std = np.zeros(n + n_slack + len(art_cols))
    for r in range(m):
        x_std[basis[r]] = tableau[r, -1]
    x = back(x_std[:n])
    # refine: re-solve the basic system from pristine data to shed the
    # round-off accumulated across pivots; keep whichever candidate fits better
    try:
        x_basic = np.linalg.solve(a0[:, basis], b0)
        if np.all(np.isfinite(x_basic)) and np.min(x_basic) >= -_FEAS_TOL:
            x_ref_std = np.zeros_like(x_std)
            for r in range(m):
                x_ref_std[basis[r]] = max(x_basic[r], 0.0)
            x_ref = back(x_ref_std[:n])
            if _feasibility_residual(lp, x_ref) < _feasibility_residual(lp, x):
                x = x_ref
    except np.linalg.LinAlgError:
        pass
    value = float(lp.c @ x)

    residual = _feasibility_residual(lp, x)
    if residual > 1e-6:
        raise NumericalBreakdown(f"solution residual {residual:.3e} too large")
    return LpSolution(status="Optimal", x=x, value=value,
                      residual=residual, iterations=n_iters)


def _rhs_scale(lp):
    scale = 0.0
    for b in (lp.b_ub, lp.b_eq):
        if b is not None and len(b):
            scale = max(scale, float(np.max(np.abs(b))))
    return scale


def _feasibility_residual(lp: LinearProgram, x) -> float:
    """Worst constraint violation, each row measured relative to its own scale."""
    res = 0.0
    if lp.a_ub is not None and len(lp.b_ub):
        scale = np.maximum(np.max(np.abs(lp.a_ub), axis=1), np.abs(lp.b_ub))
        viol = (lp.a_ub @ x - lp.b_ub) / np.maximum(scale, 1.0)
        res = max(res, float(np.max(viol, initial=0.0)))
    if lp.a_eq is not None and len(lp.b_eq):
        scale = np.maximum(np.max(np.abs(lp.a_eq), axis=1), np.abs(lp.b_eq))
        viol = np.abs(lp.a_eq @ x - lp.b_eq) / np.maximum(scale, 1.0)
        res = max(res, float(np.max(viol, initial=0.0)))
    lo = np.where(np.isfinite(lp.lower), lp.lower, 0.0)
    hi = np.where(np.isfinite(lp.upper), lp.upper, 0.0)
    res = max(res, float(np.max((lp.lower - x) / np.maximum(np.abs(lo), 1.0), initial=0.0)))
    res = max(res, float(np.max((x - lp.upper) / np.maximum(np.abs(hi), 1.0), initial=0.0)))
    return res
