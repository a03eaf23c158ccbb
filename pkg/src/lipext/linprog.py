"""Small dense linear programming driver.

Two-phase primal simplex with Bland's rule on a dense tableau. The float path
runs the pivot loop in the compiled kernel; ``exact=True`` runs the same
algorithm over :class:`fractions.Fraction` with zero tolerances, and is meant
as an oracle for tiny problems.

Problems are stated as::

    minimise    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x[j] >= 0  unless free[j]
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels


class LPError(RuntimeError):
    """Raised when an LP is infeasible, unbounded or hits its iteration limit."""

    def __init__(self, message, status):
        super().__init__(message)
        self.status = status


@dataclass
class LPResult:
    x: np.ndarray
    fun: object
    status: str
    iterations: int


def _to_dense(A, n, dtype):
    if A is None:
        return np.zeros((0, n), dtype=dtype)
    if hasattr(A, "toarray"):
        A = A.toarray()
    return np.asarray(A, dtype=dtype).reshape(-1, n)


def _as_fraction_array(a):
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    flat_in = a.ravel()
    flat_out = out.ravel()
    for k, v in enumerate(flat_in):
        flat_out[k] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def _pivot_loop_exact(T, basis, allowed, max_iter):
    r = T.shape[0] - 1
    c = T.shape[1] - 1
    it = 0
    zero = Fraction(0)
    while True:
        j = -1
        for jj in range(c):
            if allowed[jj] and T[r, jj] < zero:
                j = jj
                break
        if j < 0:
            return _kernels._fallback.OPTIMAL, it
        if it >= max_iter:
            return _kernels._fallback.ITERATION_LIMIT, it
        piv = -1
        best = None
        for row in range(r):
            if T[row, j] > zero:
                ratio = T[row, c] / T[row, j]
                if best is None or ratio < best or (ratio == best and basis[row] < basis[piv]):
                    best = ratio
                    piv = row
        if piv < 0:
            return _kernels._fallback.UNBOUNDED, it
        T[piv, :] = T[piv, :] / T[piv, j]
        for row in range(r + 1):
            if row != piv and T[row, j] != zero:
                T[row, :] = T[row, :] - T[row, j] * T[piv, :]
        basis[piv] = j
        it += 1


def _run(T, basis, allowed, exact, tol, max_iter, kernels):
    if exact:
        return _pivot_loop_exact(T, basis, allowed, max_iter)
    return kernels.tableau_simplex(T, basis, np.asarray(allowed, dtype=np.uint8), tol, max_iter)


def solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None, *,
          exact=False, tol=1e-10, max_iter=200000, backend=None):
    """Solve a small LP with the in-repo simplex.

    Returns
    -------
    LPResult
        ``x`` and ``fun`` are floats, or Fractions when ``exact``.

    Raises
    ------
    LPError
        On infeasibility, unboundedness or iteration limit.
    """
    kernels = _kernels.get_backend(backend)
    dtype = object if exact else np.float64
    c = np.asarray(c, dtype=float if not exact else object).ravel()
    n = c.size
    A_ub = _to_dense(A_ub, n, dtype)
    A_eq = _to_dense(A_eq, n, dtype)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=dtype).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=dtype).ravel()
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if exact:
        c, A_ub, A_eq = (_as_fraction_array(a) for a in (c, A_ub, A_eq))
        b_ub, b_eq = _as_fraction_array(b_ub), _as_fraction_array(b_eq)

    # split free variables x = x+ - x-
    free_idx = np.flatnonzero(free)
    n_split = n + free_idx.size
    if free_idx.size:
        c = np.concatenate([c, -c[free_idx]])
        A_ub = np.hstack([A_ub, -A_ub[:, free_idx]])
        A_eq = np.hstack([A_eq, -A_eq[:, free_idx]])

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    # columns: structural | slacks (m_ub) | artificials (as needed)
    rows = np.vstack([A_ub, A_eq]) if m else np.zeros((0, n_split), dtype=dtype)
    rhs = np.concatenate([b_ub, b_eq]) if m else np.zeros(0, dtype=dtype)
    slack = np.zeros((m, m_ub), dtype=dtype)
    if exact:
        slack[:] = zero
    for i in range(m_ub):
        slack[i, i] = one
    neg = np.array([rhs[i] < zero for i in range(m)], dtype=bool)
    rows = rows.copy()
    rhs = rhs.copy()
    rows[neg] = -rows[neg]
    slack[neg] = -slack[neg]
    rhs[neg] = -rhs[neg]
    need_art = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(need_art)
    width = n_split + m_ub + n_art
    T = np.zeros((m + 1, width + 1), dtype=dtype)
    if exact:
        T[:] = zero
    T[:m, :n_split] = rows
    T[:m, n_split:n_split + m_ub] = slack
    basis = np.empty(m, dtype=np.int_)
    for i in range(m_ub):
        basis[i] = n_split + i
    for k, i in enumerate(need_art):
        T[i, n_split + m_ub + k] = one
        basis[i] = n_split + m_ub + k
    T[:m, width] = rhs
    art_cols = np.arange(n_split + m_ub, width)
    total_iter = 0

    if n_art:
        # phase 1: minimise the sum of artificials
        T[m, :] = zero
        for i in need_art:
            T[m, :] = T[m, :] - T[i, :]
        T[m, art_cols] = zero
        allowed = np.ones(width, dtype=bool)
        status, it = _run(T, basis, allowed, exact, tol, max_iter, kernels)
        total_iter += it
        if status != 0:
            raise LPError("phase 1 did not converge", "phase1")
        infeas = -T[m, width]
        scale = max(1.0, float(np.max(np.abs(rhs.astype(float))))) if m else 1.0
        if (infeas > 0) if exact else (infeas > 1e-8 * scale):
            raise LPError(f"infeasible (phase-1 residual {float(infeas):.3e})", "infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n_split + m_ub:
                row = T[i, :n_split + m_ub]
                mags = np.array([abs(float(v)) for v in row])
                cand = np.flatnonzero(mags > (0 if exact else 1e-9))
                if cand.size == 0:
                    keep[i] = False
                    continue
                j = int(cand[0])
                T[i, :] = T[i, :] / T[i, j]
                for r2 in range(m + 1):
                    if r2 != i and T[r2, j] != zero:
                        T[r2, :] = T[r2, :] - T[r2, j] * T[i, :]
                basis[i] = j
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = basis[keep]
            m = int(keep.sum())
        T = np.ascontiguousarray(T)

    # phase 2
    cost = np.zeros(width, dtype=dtype)
    if exact:
        cost[:] = zero
    cost[:n_split] = c
    T[m, :width] = cost
    T[m, width] = zero
    for i in range(m):
        cb = cost[basis[i]]
        if cb != zero:
            T[m, :] = T[m, :] - cb * T[i, :]
    allowed = np.ones(width, dtype=bool)
    allowed[art_cols] = False
    basis = np.ascontiguousarray(basis)
    status, it = _run(T, basis, allowed, exact, tol, max_iter, kernels)
    total_iter += it
    if status == 1:
        raise LPError("unbounded", "unbounded")
    if status == 2:
        raise LPError("iteration limit reached", "iteration_limit")

    xs = np.zeros(width, dtype=dtype)
    if exact:
        xs[:] = zero
    for i in range(m):
        xs[basis[i]] = T[i, width]
    x = xs[:n].copy()
    if free_idx.size:
        x[free_idx] = x[free_idx] - xs[n:n_split]
    fun = -T[m, width]
    if not exact:
        x = x.astype(float)
        fun = float(fun)
    return LPResult(x=x, fun=fun, status="optimal", iterations=int(total_iter))


def solve_highs(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, free=None, *, tol=1e-10):
    """Same problem statement, solved with scipy's HiGHS (for large sparse LPs)."""
    from scipy.optimize import linprog

    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    free = np.zeros(n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    bounds = [(None, None) if f else (0, None) for f in free]
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol,
                 "presolve": True},
    )
    if res.status == 2:
        raise LPError("infeasible", "infeasible")
    if res.status == 3:
        raise LPError("unbounded", "unbounded")
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}", "solver_failure")
    return LPResult(x=np.asarray(res.x, dtype=float), fun=float(res.fun), status="optimal",
                    iterations=int(getattr(res, "nit", 0)))
