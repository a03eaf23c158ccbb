"""Wasserstein-1 norm on zero-mass signed measures over a finite metric space.

The primal value is a transportation problem between the positive and negative
parts; the dual is the Kantorovich-Rubinstein LP over 1-Lipschitz potentials.
Both are solved in-repo. An exact rational variant serves as a test oracle.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels, linprog
from .metric import FiniteMetricSpace, PointCloud, lp_norm, pairwise_distances

MASS_TOL = 1e-12
EXACT_MAX_SUPPORT = 12


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class SignedMeasure:
    """Zero-mass weights on the points of a finite metric space."""

    support: FiniteMetricSpace
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size != self.support.size:
            raise ValueError(f"{w.size} weights for a support of size {self.support.size}")
        total = w.sum()
        if abs(total) > MASS_TOL * max(1.0, np.abs(w).sum()):
            raise ValueError(f"total mass {total:.3e} is not zero")
        if total != 0.0:
            w = w - total / w.size
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self):
        return self.support.size

    def __add__(self, other):
        return SignedMeasure(self.support, self.weights + other.weights)

    def __sub__(self, other):
        return SignedMeasure(self.support, self.weights - other.weights)

    def __mul__(self, c):
        return SignedMeasure(self.support, float(c) * self.weights)

    __rmul__ = __mul__

    def __neg__(self):
        return SignedMeasure(self.support, -self.weights)

    def to_dict(self, support=None):
        return {"support": support if support is not None else self.support.to_dict(),
                "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d):
        sup = d["support"]
        if "points" in sup:
            metric = FiniteMetricSpace(PointCloud.from_dict(sup).distances())
        else:
            metric = FiniteMetricSpace.from_dict(sup)
        return cls(metric, d["weights"])


def dirac_difference(support: FiniteMetricSpace, a: int, b: int) -> SignedMeasure:
    """delta_a - delta_b."""
    w = np.zeros(support.size)
    w[a] += 1.0
    w[b] -= 1.0
    return SignedMeasure(support, w)


@dataclass(frozen=True)
class TransportPlan:
    flow: np.ndarray
    cost: float

    def marginals(self):
        return self.flow.sum(axis=1), self.flow.sum(axis=0)


@dataclass(frozen=True)
class LipschitzPotential:
    values: np.ndarray

    def max_violation(self, dist):
        v = self.values
        return float(np.max(v[:, None] - v[None, :] - dist))


def jordan_decompose(mu: SignedMeasure):
    """Positive and negative parts ``(max(w, 0), max(-w, 0))``."""
    w = mu.weights
    return np.maximum(w, 0.0), np.maximum(-w, 0.0)


def w1_norm_primal(mu: SignedMeasure, *, backend=None, max_iter=100_000):
    """Minimal transport cost from the positive to the negative part.

    Returns
    -------
    value : float
    plan : TransportPlan
        Full ``m x m`` coupling; zero for the zero measure.
    """
    m = mu.size
    pos, neg = jordan_decompose(mu)
    pi = np.flatnonzero(pos > 0.0)
    ni = np.flatnonzero(neg > 0.0)
    flow = np.zeros((m, m))
    if pi.size == 0:
        return 0.0, TransportPlan(flow, 0.0)
    supply = pos[pi]
    demand = neg[ni]
    # absorb float drift of the recentring into the demand side
    demand = demand * (supply.sum() / demand.sum())
    cost = mu.support.dist[np.ix_(pi, ni)]
    kern = _kernels.get_backend(backend)
    sub, _, _, it, status = kern.transport_simplex(supply, demand, cost, 1e-12, max_iter)
    if status != 0:
        resid = max(np.abs(sub.sum(1) - supply).max(), np.abs(sub.sum(0) - demand).max())
        raise TransportError(f"transport simplex stopped after {it} iterations "
                             f"(status {status}, marginal residual {resid:.2e})")
    flow[np.ix_(pi, ni)] = sub
    value = float((sub * cost).sum())
    return value, TransportPlan(flow, value)


def w1_norm_dual(mu: SignedMeasure, *, backend=None, exact=False):
    """Kantorovich-Rubinstein value ``max sum_i w_i phi_i`` over 1-Lipschitz ``phi``.

    The LP is posed on the support of ``mu`` (shifted so ``phi >= 0``, making
    the origin feasible) and the optimum is extended to all of the space with
    the McShane formula ``phi(x) = min_i phi_i + d(x, i)``.
    """
    w = mu.weights
    dist = mu.support.dist
    idx = np.flatnonzero(w != 0.0)
    if idx.size == 0:
        return 0.0, LipschitzPotential(np.zeros(mu.size))
    k = idx.size
    d = dist[np.ix_(idx, idx)]
    rows, rhs = [], []
    for a in range(k):
        for b in range(k):
            if a != b:
                r = np.zeros(k)
                r[a], r[b] = 1.0, -1.0
                rows.append(r)
                rhs.append(d[a, b])
    res = linprog.solve(-w[idx], np.array(rows), np.array(rhs), exact=exact, backend=backend)
    phi_s = np.asarray(res.x, dtype=float)
    phi = np.min(phi_s[None, :] + dist[:, idx], axis=1)
    phi[idx] = phi_s
    value = float(-res.fun)
    return value, LipschitzPotential(phi)


def w1_norm_exact(dist, weights) -> Fraction:
    """W1 norm in exact rational arithmetic (primal coupling LP).

    ``dist`` and ``weights`` are converted to :class:`~fractions.Fraction`
    exactly; weights must sum to exactly zero. Supports up to 12 points.
    """
    dist = np.asarray(dist.dist if isinstance(dist, FiniteMetricSpace) else dist)
    m = dist.shape[0]
    if m > EXACT_MAX_SUPPORT:
        raise ValueError(f"exact mode supports at most {EXACT_MAX_SUPPORT} points, got {m}")
    w = [Fraction(x) for x in weights]
    if sum(w) != 0:
        raise ValueError("weights must have exactly zero total mass")
    pi = [i for i in range(m) if w[i] > 0]
    ni = [j for j in range(m) if w[j] < 0]
    if not pi:
        return Fraction(0)
    nv = len(pi) * len(ni)
    c = np.empty(nv, dtype=object)
    A = np.empty((len(pi) + len(ni), nv), dtype=object)
    A[:] = Fraction(0)
    for a, i in enumerate(pi):
        for b, j in enumerate(ni):
            v = a * len(ni) + b
            c[v] = Fraction(dist[i, j])
            A[a, v] = Fraction(1)
            A[len(pi) + b, v] = Fraction(1)
    b_eq = np.array([w[i] for i in pi] + [-w[j] for j in ni], dtype=object)
    return linprog.solve(c, A_eq=A, b_eq=b_eq, exact=True).fun


def moment(mu: SignedMeasure, coords: PointCloud) -> np.ndarray:
    """``sum_w mu(w) * w`` using the coordinates of the support points."""
    pts = np.asarray(coords.points if isinstance(coords, PointCloud) else coords, dtype=float)
    if pts.shape[0] != mu.size:
        raise ValueError(f"{pts.shape[0]} coordinates for a support of size {mu.size}")
    return mu.weights @ pts


def moment_bound_slack(mu: SignedMeasure, coords: PointCloud, p=None, *, tol=1e-9) -> float:
    """``||mu||_W1 - ||Moment(mu)||_p``; nonnegative when the support metric is the l_p metric."""
    p = coords.p if p is None else p
    d = pairwise_distances(coords.points, p)
    if d.shape != mu.support.dist.shape or np.abs(d - mu.support.dist).max() > tol * max(1.0, d.max()):
        raise ValueError("support metric is not the l_p metric of the coordinates")
    value, _ = w1_norm_primal(mu)
    return value - float(lp_norm(moment(mu, coords), p))


def write_plan_csv(plan: TransportPlan, dist, path):
    """Nonzero cells of a plan as rows ``i, j, flow, cost``."""
    dist = dist.dist if isinstance(dist, FiniteMetricSpace) else np.asarray(dist)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["i", "j", "flow", "cost"])
        for i, j in zip(*np.nonzero(plan.flow)):
            out.writerow([int(i), int(j), repr(float(plan.flow[i, j])),
                          repr(float(plan.flow[i, j] * dist[i, j]))])
