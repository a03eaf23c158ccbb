"""Pure-Python/numpy implementations of the hot kernels.

Semantics are identical to the compiled versions in ``_core.pyx``; the test
suite runs both and compares results.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def _northwest_corner(supply, demand):
    s, t = len(supply), len(demand)
    rem_s = supply.copy()
    rem_d = demand.copy()
    cells_i = []
    cells_j = []
    flows = []
    i = j = 0
    while True:
        x = min(rem_s[i], rem_d[j])
        if x < 0.0:
            x = 0.0
        cells_i.append(i)
        cells_j.append(j)
        flows.append(x)
        rem_s[i] -= x
        rem_d[j] -= x
        if i == s - 1 and j == t - 1:
            break
        if i == s - 1:
            j += 1
        elif j == t - 1:
            i += 1
        elif rem_s[i] <= rem_d[j]:
            i += 1
        else:
            j += 1
    return cells_i, cells_j, flows


def _potentials(s, t, bi, bj, cost):
    nb = len(bi)
    row_cells = [[] for _ in range(s)]
    col_cells = [[] for _ in range(t)]
    for k in range(nb):
        row_cells[bi[k]].append(k)
        col_cells[bj[k]].append(k)
    u = np.zeros(s)
    v = np.zeros(t)
    seen_r = [False] * s
    seen_c = [False] * t
    seen_r[0] = True
    stack = [(0, 0)]  # (kind, index): kind 0 row, 1 column
    while stack:
        kind, idx = stack.pop()
        if kind == 0:
            for k in row_cells[idx]:
                j = bj[k]
                if not seen_c[j]:
                    v[j] = cost[idx, j] - u[idx]
                    seen_c[j] = True
                    stack.append((1, j))
        else:
            for k in col_cells[idx]:
                i = bi[k]
                if not seen_r[i]:
                    u[i] = cost[i, idx] - v[idx]
                    seen_r[i] = True
                    stack.append((0, i))
    return u, v, row_cells, col_cells


def _tree_path(s, t, bi, bj, row_cells, col_cells, start_row, target_col):
    """Basic cells on the tree path from row node ``start_row`` to column node ``target_col``."""
    n_nodes = s + t
    parent_cell = [-1] * n_nodes
    visited = [False] * n_nodes
    visited[start_row] = True
    queue = [start_row]
    head = 0
    goal = s + target_col
    while head < len(queue):
        node = queue[head]
        head += 1
        if node == goal:
            break
        if node < s:
            for k in row_cells[node]:
                nxt = s + bj[k]
                if not visited[nxt]:
                    visited[nxt] = True
                    parent_cell[nxt] = k
                    queue.append(nxt)
        else:
            for k in col_cells[node - s]:
                nxt = bi[k]
                if not visited[nxt]:
                    visited[nxt] = True
                    parent_cell[nxt] = k
                    queue.append(nxt)
    path = []
    node = goal
    while node != start_row:
        k = parent_cell[node]
        path.append(k)
        node = bi[k] if node >= s else s + bj[k]
    # path runs from the column end back to the row end
    return path


def transport_simplex(supply, demand, cost, tol=1e-12, max_iter=100000):
    """Transportation simplex (u-v method) with Bland's rule.

    Parameters
    ----------
    supply, demand : ndarray
        Nonnegative marginals with (numerically) equal totals.
    cost : ndarray of shape (len(supply), len(demand))

    Returns
    -------
    flow : ndarray
    u, v : ndarray
        Dual potentials with ``u[i] + v[j] <= cost[i, j] + tol`` at optimality.
    iterations : int
    status : int
        0 optimal, 2 iteration limit.
    """
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    s, t = len(supply), len(demand)
    bi, bj, flows = _northwest_corner(supply, demand)
    basic = -np.ones((s, t), dtype=np.int64)
    for k in range(len(bi)):
        basic[bi[k], bj[k]] = k
    scale = max(1.0, float(np.abs(cost).max())) if cost.size else 1.0
    rc_tol = tol * scale
    it = 0
    status = OPTIMAL
    while True:
        u, v, row_cells, col_cells = _potentials(s, t, bi, bj, cost)
        reduced = cost - u[:, None] - v[None, :]
        reduced[basic >= 0] = 0.0
        cand = np.flatnonzero(reduced.ravel() < -rc_tol)
        if cand.size == 0:
            break
        if it >= max_iter:
            status = ITERATION_LIMIT
            break
        it += 1
        e = int(cand[0])
        ei, ej = divmod(e, t)
        path = _tree_path(s, t, bi, bj, row_cells, col_cells, ei, ej)
        # path[0] touches column ej: it is a "minus" cell; signs alternate.
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flows[k] for k in minus)
        tie = theta + 1e-15 * max(1.0, theta)
        leave = min((bi[k] * t + bj[k], k) for k in minus if flows[k] <= tie)[1]
        for k in minus:
            flows[k] = max(flows[k] - theta, 0.0)
        for k in plus:
            flows[k] += theta
        basic[bi[leave], bj[leave]] = -1
        bi[leave] = ei
        bj[leave] = ej
        flows[leave] = theta
        basic[ei, ej] = leave
    flow = np.zeros((s, t))
    for k in range(len(bi)):
        flow[bi[k], bj[k]] += flows[k]
    return flow, u, v, it, status


def tableau_simplex(T, basis, allowed, tol=1e-11, max_iter=50000):
    """Bland's-rule primal simplex on a dense tableau, in place.

    ``T`` has shape ``(r + 1, c + 1)``: constraint rows ``0..r-1`` with the
    right-hand side in the last column, and the reduced-cost row last (its
    final entry is minus the objective). Minimises.
    """
    r = T.shape[0] - 1
    c = T.shape[1] - 1
    allowed = np.asarray(allowed, dtype=bool)
    it = 0
    while True:
        red = T[r, :c]
        cand = np.flatnonzero((red < -tol) & allowed)
        if cand.size == 0:
            return OPTIMAL, it
        if it >= max_iter:
            return ITERATION_LIMIT, it
        j = int(cand[0])
        col = T[:r, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = T[rows, c] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        i = int(ties[np.argmin(basis[ties])])
        T[i, :] /= T[i, j]
        f = T[:, j].copy()
        f[i] = 0.0
        T -= np.outer(f, T[i, :])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        it += 1


def _dist_to_rows(X, x, p):
    diff = np.abs(X - x)
    if p == 1.0:
        return diff.sum(axis=1)
    if p == 2.0:
        return np.sqrt((diff * diff).sum(axis=1))
    if np.isinf(p):
        return diff.max(axis=1)
    return (diff ** p).sum(axis=1) ** (1.0 / p)


def greedy_select(candidates, eps, p, n_fixed=0):
    """Greedy maximal ``eps``-separated selection over a candidate stream.

    The first ``n_fixed`` candidates are always kept (they must already be
    separated). Returns the boolean acceptance mask.
    """
    candidates = np.ascontiguousarray(candidates, dtype=np.float64)
    k, n = candidates.shape
    accepted = np.zeros(k, dtype=bool)
    sel = np.empty((k, n))
    count = 0
    for idx in range(k):
        x = candidates[idx]
        if idx < n_fixed:
            ok = True
        elif count == 0:
            ok = True
        else:
            ok = bool(_dist_to_rows(sel[:count], x, p).min() >= eps)
        if ok:
            accepted[idx] = True
            sel[count] = x
            count += 1
    return accepted
