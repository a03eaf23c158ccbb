# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: transportation simplex, dense Bland tableau pivoting
and greedy separated-set selection.

Mirrors ``_fallback.py`` exactly (same pivot rules, same tie-breaking).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, INFINITY, isinf

cnp.import_array()

DEF OPTIMAL = 0
DEF UNBOUNDED = 1
DEF ITERATION_LIMIT = 2


cdef void _potentials(Py_ssize_t s, Py_ssize_t t, Py_ssize_t nb,
                      long[::1] bi, long[::1] bj, double[:, ::1] cost,
                      double[::1] u, double[::1] v,
                      long[::1] rstart, long[::1] rlist,
                      long[::1] cstart, long[::1] clist,
                      long[::1] stack, char[::1] seen) noexcept nogil:
    cdef Py_ssize_t k, i, j, top, node, idx
    # CSR adjacency of rows/columns onto basic cells
    for i in range(s + 1):
        rstart[i] = 0
    for j in range(t + 1):
        cstart[j] = 0
    for k in range(nb):
        rstart[bi[k] + 1] += 1
        cstart[bj[k] + 1] += 1
    for i in range(s):
        rstart[i + 1] += rstart[i]
    for j in range(t):
        cstart[j + 1] += cstart[j]
    # stack doubles as the fill cursor
    for i in range(s):
        stack[i] = rstart[i]
    for k in range(nb):
        rlist[stack[bi[k]]] = k
        stack[bi[k]] += 1
    for j in range(t):
        stack[j] = cstart[j]
    for k in range(nb):
        clist[stack[bj[k]]] = k
        stack[bj[k]] += 1
    for node in range(s + t):
        seen[node] = 0
    u[0] = 0.0
    seen[0] = 1
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if node < s:
            for idx in range(rstart[node], rstart[node + 1]):
                k = rlist[idx]
                j = bj[k]
                if not seen[s + j]:
                    v[j] = cost[node, j] - u[node]
                    seen[s + j] = 1
                    stack[top] = s + j
                    top += 1
        else:
            j = node - s
            for idx in range(cstart[j], cstart[j + 1]):
                k = clist[idx]
                i = bi[k]
                if not seen[i]:
                    u[i] = cost[i, j] - v[j]
                    seen[i] = 1
                    stack[top] = i
                    top += 1


cdef Py_ssize_t _tree_path(Py_ssize_t s, Py_ssize_t t,
                           long[::1] bi, long[::1] bj,
                           long[::1] rstart, long[::1] rlist,
                           long[::1] cstart, long[::1] clist,
                           Py_ssize_t start_row, Py_ssize_t target_col,
                           long[::1] queue, long[::1] parent, char[::1] seen,
                           long[::1] path) noexcept nogil:
    cdef Py_ssize_t head = 0, tail = 0, node, idx, k, nxt, goal, plen = 0
    for node in range(s + t):
        seen[node] = 0
        parent[node] = -1
    seen[start_row] = 1
    queue[tail] = start_row
    tail += 1
    goal = s + target_col
    while head < tail:
        node = queue[head]
        head += 1
        if node == goal:
            break
        if node < s:
            for idx in range(rstart[node], rstart[node + 1]):
                k = rlist[idx]
                nxt = s + bj[k]
                if not seen[nxt]:
                    seen[nxt] = 1
                    parent[nxt] = k
                    queue[tail] = nxt
                    tail += 1
        else:
            for idx in range(cstart[node - s], cstart[node - s + 1]):
                k = clist[idx]
                nxt = bi[k]
                if not seen[nxt]:
                    seen[nxt] = 1
                    parent[nxt] = k
                    queue[tail] = nxt
                    tail += 1
    node = goal
    while node != start_row:
        k = parent[node]
        path[plen] = k
        plen += 1
        if node >= s:
            node = bi[k]
        else:
            node = s + bj[k]
    return plen


def transport_simplex(supply, demand, cost, double tol=1e-12, long max_iter=100000):
    cdef double[::1] sup = np.ascontiguousarray(supply, dtype=np.float64).copy()
    cdef double[::1] dem = np.ascontiguousarray(demand, dtype=np.float64).copy()
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t s = sup.shape[0], t = dem.shape[0]
    cdef Py_ssize_t nb = s + t - 1
    cdef long[::1] bi = np.zeros(nb, dtype=np.int_)
    cdef long[::1] bj = np.zeros(nb, dtype=np.int_)
    cdef double[::1] flows = np.zeros(nb)
    cdef long[:, ::1] basic = -np.ones((s, t), dtype=np.int_)
    cdef double[::1] u = np.zeros(s)
    cdef double[::1] v = np.zeros(t)
    cdef long[::1] rstart = np.zeros(s + 1, dtype=np.int_)
    cdef long[::1] cstart = np.zeros(t + 1, dtype=np.int_)
    cdef long[::1] rlist = np.zeros(nb, dtype=np.int_)
    cdef long[::1] clist = np.zeros(nb, dtype=np.int_)
    cdef long[::1] stack = np.zeros(s + t + 1, dtype=np.int_)
    cdef long[::1] queue = np.zeros(s + t + 1, dtype=np.int_)
    cdef long[::1] parent = np.zeros(s + t, dtype=np.int_)
    cdef long[::1] path = np.zeros(nb, dtype=np.int_)
    cdef char[::1] seen = np.zeros(s + t, dtype=np.int8)
    cdef Py_ssize_t i = 0, j = 0, k = 0, plen, q, ei = 0, ej = 0, leave
    cdef long best_idx, cell_idx
    cdef double x, theta, tie, scale = 1.0, rc_tol, rc
    cdef long it = 0
    cdef int status = OPTIMAL
    cdef bint found

    # northwest corner
    while True:
        x = sup[i] if sup[i] < dem[j] else dem[j]
        if x < 0.0:
            x = 0.0
        bi[k] = i
        bj[k] = j
        flows[k] = x
        basic[i, j] = k
        k += 1
        sup[i] -= x
        dem[j] -= x
        if i == s - 1 and j == t - 1:
            break
        if i == s - 1:
            j += 1
        elif j == t - 1:
            i += 1
        elif sup[i] <= dem[j]:
            i += 1
        else:
            j += 1

    for i in range(s):
        for j in range(t):
            if fabs(c[i, j]) > scale:
                scale = fabs(c[i, j])
    rc_tol = tol * scale

    with nogil:
        while True:
            _potentials(s, t, nb, bi, bj, c, u, v, rstart, rlist, cstart, clist, stack, seen)
            found = False
            for i in range(s):
                for j in range(t):
                    if basic[i, j] < 0:
                        rc = c[i, j] - u[i] - v[j]
                        if rc < -rc_tol:
                            ei = i
                            ej = j
                            found = True
                            break
                if found:
                    break
            if not found:
                break
            if it >= max_iter:
                status = ITERATION_LIMIT
                break
            it += 1
            plen = _tree_path(s, t, bi, bj, rstart, rlist, cstart, clist,
                              ei, ej, queue, parent, seen, path)
            theta = INFINITY
            q = 0
            while q < plen:
                if flows[path[q]] < theta:
                    theta = flows[path[q]]
                q += 2
            tie = theta + 1e-15 * (theta if theta > 1.0 else 1.0)
            leave = -1
            best_idx = -1
            q = 0
            while q < plen:
                k = path[q]
                if flows[k] <= tie:
                    cell_idx = bi[k] * t + bj[k]
                    if leave < 0 or cell_idx < best_idx:
                        leave = k
                        best_idx = cell_idx
                q += 2
            q = 0
            while q < plen:
                k = path[q]
                if q % 2 == 0:
                    flows[k] -= theta
                    if flows[k] < 0.0:
                        flows[k] = 0.0
                else:
                    flows[k] += theta
                q += 1
            basic[bi[leave], bj[leave]] = -1
            bi[leave] = ei
            bj[leave] = ej
            flows[leave] = theta
            basic[ei, ej] = leave

    flow = np.zeros((s, t))
    cdef double[:, ::1] fv = flow
    for k in range(nb):
        fv[bi[k], bj[k]] += flows[k]
    return flow, np.asarray(u).copy(), np.asarray(v).copy(), int(it), int(status)


def tableau_simplex(double[:, ::1] T, long[::1] basis, allowed,
                    double tol=1e-11, long max_iter=50000):
    cdef Py_ssize_t r = T.shape[0] - 1, c = T.shape[1] - 1
    cdef cnp.uint8_t[::1] ok = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef Py_ssize_t i, j, jj, row, piv
    cdef double best, ratio, pv, f, tie
    cdef long it = 0
    cdef int status = OPTIMAL
    with nogil:
        while True:
            j = -1
            for jj in range(c):
                if ok[jj] and T[r, jj] < -tol:
                    j = jj
                    break
            if j < 0:
                status = OPTIMAL
                break
            if it >= max_iter:
                status = ITERATION_LIMIT
                break
            best = INFINITY
            for row in range(r):
                if T[row, j] > tol:
                    ratio = T[row, c] / T[row, j]
                    if ratio < best:
                        best = ratio
            if best == INFINITY:
                status = UNBOUNDED
                break
            tie = best + 1e-12 * (fabs(best) if fabs(best) > 1.0 else 1.0)
            piv = -1
            for row in range(r):
                if T[row, j] > tol:
                    ratio = T[row, c] / T[row, j]
                    if ratio <= tie and (piv < 0 or basis[row] < basis[piv]):
                        piv = row
            pv = T[piv, j]
            for jj in range(c + 1):
                T[piv, jj] /= pv
            for row in range(r + 1):
                if row != piv:
                    f = T[row, j]
                    if f != 0.0:
                        for jj in range(c + 1):
                            T[row, jj] -= f * T[piv, jj]
                        T[row, j] = 0.0
            T[piv, j] = 1.0
            basis[piv] = j
            it += 1
    return status, it


def greedy_select(candidates, double eps, double p, long n_fixed=0):
    cdef double[:, ::1] X = np.ascontiguousarray(candidates, dtype=np.float64)
    cdef Py_ssize_t k = X.shape[0], n = X.shape[1]
    accepted = np.zeros(k, dtype=bool)
    cdef cnp.uint8_t[::1] acc = accepted.view(np.uint8)
    cdef long[::1] sel = np.zeros(k, dtype=np.int_)
    cdef Py_ssize_t count = 0, idx, a, d
    cdef double dist, diff
    cdef bint ok
    cdef bint p_inf = isinf(p)
    with nogil:
        for idx in range(k):
            ok = True
            if idx >= n_fixed:
                for a in range(count):
                    dist = 0.0
                    for d in range(n):
                        diff = fabs(X[idx, d] - X[sel[a], d])
                        if p_inf:
                            if diff > dist:
                                dist = diff
                        elif p == 1.0:
                            dist += diff
                        elif p == 2.0:
                            dist += diff * diff
                        else:
                            dist += pow(diff, p)
                    if not p_inf:
                        if p == 2.0:
                            dist = sqrt(dist)
                        elif p != 1.0:
                            dist = pow(dist, 1.0 / p)
                    if dist < eps:
                        ok = False
                        break
            if ok:
                acc[idx] = 1
                sel[count] = idx
                count += 1
    return accepted
