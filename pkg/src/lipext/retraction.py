"""Optimal almost-extension error on a finite instance via stochastic retractions.

A finite ambient metric space ``M`` contains a subset ``Omega``. A retraction
family assigns to each ``x`` in ``M`` a zero-mass measure ``mu_x`` on ``Omega``
with

    ||mu_x - mu_y||_W1 <= L d(x, y)                 for all x, y in M
    ||mu_w - (delta_w - nu)||_W1 <= A * eps * a_w   for all w in Omega

The smallest such ``A`` is an LP: each W1 constraint is the epigraph of a
min-cost flow whose divergence is the (variable) measure difference. Given a
family, ``F(x) = sum_w mu_x(w) f(w) + sum_w nu(w) f(w)`` turns any 1-Lipschitz
``f`` on ``Omega`` into an L-Lipschitz map on ``M`` with per-point error at most
``A * eps * a_w``; :func:`verify_equivalence` runs that construction numerically.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

from . import linprog
from .metric import FiniteMetricSpace, PointCloud
from .transport import SignedMeasure, w1_norm_primal

MAX_AMBIENT = 60
MAX_SUBSET = 40
DEFAULT_LP_BUDGET = 2_000_000  # flow variables
GEODESIC_RTOL = 1e-12


class BudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtensionInstance:
    """Finite ambient space, a subset ``Omega`` of it, a Lipschitz budget and ``nu``.

    ``alpha`` holds per-point error weights ``a_w`` (default all ones).
    """

    ambient: FiniteMetricSpace
    subset: tuple
    L: float = 1.0
    nu: np.ndarray | None = None
    alpha: np.ndarray | None = None

    def __post_init__(self):
        sub = tuple(int(i) for i in self.subset)
        if not sub:
            raise ValueError("subset is empty")
        if len(set(sub)) != len(sub):
            raise ValueError("subset indices repeat")
        if min(sub) < 0 or max(sub) >= self.ambient.size:
            raise ValueError("subset index out of range")
        object.__setattr__(self, "subset", sub)
        if not self.L > 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "L", float(self.L))
        k = len(sub)
        nu = np.full(k, 1.0 / k) if self.nu is None else np.array(self.nu, dtype=float).ravel()
        if nu.size != k or np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-12:
            raise ValueError("nu must be a probability vector on the subset")
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        al = np.ones(k) if self.alpha is None else np.array(self.alpha, dtype=float).ravel()
        if al.size != k or np.any(al < 0):
            raise ValueError("alpha must be a nonnegative vector on the subset")
        al.setflags(write=False)
        object.__setattr__(self, "alpha", al)

    @property
    def omega(self) -> FiniteMetricSpace:
        return self.ambient.restrict(self.subset)

    def with_nu(self, nu):
        return ExtensionInstance(self.ambient, self.subset, self.L, nu, self.alpha)

    def with_L(self, L):
        return ExtensionInstance(self.ambient, self.subset, L, self.nu, self.alpha)

    def to_dict(self):
        return {"ambient": self.ambient.to_dict(), "subset": list(self.subset), "L": self.L,
                "nu": self.nu.tolist(), "alpha": self.alpha.tolist()}

    @classmethod
    def from_dict(cls, d, L=None):
        amb = d["ambient"]
        if "points" in amb:
            metric = FiniteMetricSpace(PointCloud.from_dict(amb).distances())
        else:
            metric = FiniteMetricSpace.from_dict(amb)
        subset = d.get("subset", list(range(metric.size)))
        return cls(metric, subset, d.get("L", 1.0) if L is None else L, d.get("nu"), d.get("alpha"))


@dataclass(frozen=True)
class RetractionFamily:
    """One measure on ``Omega`` per ambient point (row ``x`` of ``weights``).

    ``kind`` is ``"signed"`` (zero mass rows) or ``"probability"``.
    """

    omega: FiniteMetricSpace
    weights: np.ndarray
    kind: str = "signed"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[1] != self.omega.size:
            raise ValueError("weights must have one column per subset point")
        if self.kind == "signed":
            mass = w.sum(axis=1)
            if np.any(np.abs(mass) > 1e-12 * np.maximum(1.0, np.abs(w).sum(axis=1))):
                raise ValueError("signed family rows must have zero mass")
            w = w - mass[:, None] / w.shape[1]
        elif self.kind == "probability":
            if np.any(w < -1e-12) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-12):
                raise ValueError("probability family rows must be probability vectors")
        else:
            raise ValueError(f"unknown family kind {self.kind!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.shape[0]

    def difference(self, x, y) -> SignedMeasure:
        return SignedMeasure(self.omega, self.weights[x] - self.weights[y])

    def measure(self, x) -> SignedMeasure:
        if self.kind != "signed":
            raise ValueError("probability rows are not zero-mass measures")
        return SignedMeasure(self.omega, self.weights[x])

    def to_dict(self):
        return {"kind": self.kind, "weights": self.weights.tolist()}


def _closeness_targets(instance, kind):
    k = len(instance.subset)
    tgt = np.eye(k)
    if kind == "signed":
        tgt = tgt - instance.nu[None, :]
    return tgt


def exact_retraction(instance: ExtensionInstance) -> RetractionFamily:
    """``mu_w = delta_w - nu`` on ``Omega`` (requires ambient = Omega)."""
    if len(instance.subset) != instance.ambient.size:
        raise ValueError("exact retraction needs ambient == subset")
    w = np.zeros((instance.ambient.size, len(instance.subset)))
    w[list(instance.subset)] = _closeness_targets(instance, "signed")
    return RetractionFamily(instance.omega, w, "signed")


def geodesic_free_edges(dist, rtol=GEODESIC_RTOL):
    """Directed edges ``(i, j)`` not split exactly by an intermediate point.

    Dropping ``(i, j)`` when ``d(i,j) = d(i,z) + d(z,j)`` for some ``z`` loses
    nothing: flow can be rerouted through ``z`` at the same cost.
    """
    m = dist.shape[0]
    edges = []
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            via = dist[i, :] + dist[:, j]
            via[[i, j]] = np.inf
            if np.all(via > dist[i, j] * (1.0 + rtol)):
                edges.append((i, j))
    return edges


def implied_pairs(dist, rtol=GEODESIC_RTOL):
    """Unordered pairs ``x < y`` whose Lipschitz constraint is not implied by shorter ones."""
    m = dist.shape[0]
    out = []
    for x in range(m):
        for y in range(x + 1, m):
            via = dist[x, :] + dist[:, y]
            via[[x, y]] = np.inf
            if np.all(via > dist[x, y] * (1.0 + rtol)):
                out.append((x, y))
    return out


@dataclass
class UniformErrorResult:
    """Optimal uniform error and a family attaining it.

    ``A_star`` is the LP optimum. ``certified_A`` is recomputed from the
    returned family with exact transport solves after it is rescaled (if
    needed) so that every Lipschitz constraint holds; it is the value the
    family provably achieves.
    """

    A_star: object
    certified_A: float
    family: RetractionFamily
    eps_scale: float
    backend: str
    pair_ratio: np.ndarray
    closeness: np.ndarray
    rescale: float
    lp_variables: int
    lp_constraints: int
    binding_pairs: list = field(default_factory=list)
    binding_closeness: list = field(default_factory=list)

    def to_dict(self, include_family=True):
        out = {
            "A_star": float(self.A_star),
            "certified_A": self.certified_A,
            "eps_scale": self.eps_scale,
            "backend": self.backend,
            "rescale": self.rescale,
            "lp_variables": self.lp_variables,
            "lp_constraints": self.lp_constraints,
            "max_pair_ratio": float(self.pair_ratio.max()) if self.pair_ratio.size else 0.0,
            "closeness": self.closeness.tolist(),
            "binding_pairs": self.binding_pairs,
            "binding_closeness": self.binding_closeness,
        }
        if include_family:
            out["family"] = self.family.to_dict()
        return out


def _build_lp(instance, eps_scale, kind, exact):
    amb = instance.ambient.dist
    sub = instance.subset
    N, k = amb.shape[0], len(sub)
    dom = amb[np.ix_(sub, sub)]
    edges = geodesic_free_edges(dom)
    E = len(edges)
    pairs = implied_pairs(amb)
    conv = (lambda v: Fraction(v)) if exact else float
    nu = instance.nu
    if exact:
        nu = [Fraction(v).limit_denominator(10**9) for v in nu]
        nu[-1] = 1 - sum(nu[:-1])
    tgt = [[(1 if i == w else 0) - (nu[i] if kind == "signed" else 0) for i in range(k)]
           for w in range(k)]

    n_mu = N * k
    a_col = n_mu
    n_blocks = len(pairs) + k
    n_var = n_mu + 1 + n_blocks * E
    c = [0] * n_var
    c[a_col] = 1

    eq_r, eq_c, eq_v, b_eq = [], [], [], []
    ub_r, ub_c, ub_v, b_ub = [], [], [], []

    def add_eq(cols, vals, rhs):
        r = len(b_eq)
        eq_r.extend([r] * len(cols))
        eq_c.extend(cols)
        eq_v.extend(vals)
        b_eq.append(rhs)

    def add_ub(cols, vals, rhs):
        r = len(b_ub)
        ub_r.extend([r] * len(cols))
        ub_c.extend(cols)
        ub_v.extend(vals)
        b_ub.append(rhs)

    one = conv(1)
    for x in range(N):
        add_eq([x * k + i for i in range(k)], [one] * k, conv(0 if kind == "signed" else 1))

    out_edges = [[] for _ in range(k)]
    in_edges = [[] for _ in range(k)]
    for e, (i, j) in enumerate(edges):
        out_edges[i].append(e)
        in_edges[j].append(e)
    edge_cost = [conv(dom[i, j]) for i, j in edges]

    def flow_block(b, mu_terms, const, cost_bound_cols, cost_bound_vals, cost_rhs):
        base = n_mu + 1 + b * E
        for i in range(k - 1):  # last node's row is implied by the mass rows
            cols = [base + e for e in out_edges[i]] + [base + e for e in in_edges[i]]
            vals = [one] * len(out_edges[i]) + [-one] * len(in_edges[i])
            for col, sgn in mu_terms:
                cols.append(col + i)
                vals.append(-sgn * one)
            add_eq(cols, vals, -const[i] if const is not None else conv(0))
        add_ub([base + e for e in range(E)] + cost_bound_cols, edge_cost + cost_bound_vals, cost_rhs)

    for b, (x, y) in enumerate(pairs):
        flow_block(b, [(x * k, 1), (y * k, -1)], None, [], [], conv(instance.L) * conv(amb[x, y]))
    for w in range(k):
        b = len(pairs) + w
        a_w = conv(eps_scale) * conv(instance.alpha[w])
        flow_block(b, [(sub[w] * k, 1)], tgt[w], [a_col], [-a_w], conv(0))

    free = np.zeros(n_var, dtype=bool)
    if kind == "signed":
        free[:n_mu] = True
    lp = dict(c=c, eq=(eq_r, eq_c, eq_v, b_eq), ub=(ub_r, ub_c, ub_v, b_ub), free=free,
              n_var=n_var, N=N, k=k, E=E, pairs=pairs)
    return lp


def _solve_lp(lp, backend):
    n = lp["n_var"]
    er, ec, ev, beq = lp["eq"]
    ur, uc, uv, bub = lp["ub"]
    if backend == "highs":
        A_eq = sparse.csr_matrix((np.asarray(ev, float), (er, ec)), shape=(len(beq), n))
        A_ub = sparse.csr_matrix((np.asarray(uv, float), (ur, uc)), shape=(len(bub), n))
        return linprog.solve_highs(np.asarray(lp["c"], float), A_ub, np.asarray(bub, float),
                                   A_eq, np.asarray(beq, float), lp["free"], tol=1e-10)
    exact = backend == "exact"
    dtype = object if exact else float
    zero = Fraction(0) if exact else 0.0

    def dense(r, cc, v, m):
        A = np.empty((m, n), dtype=dtype)
        A[:] = zero
        for a, b_, val in zip(r, cc, v):
            A[a, b_] = A[a, b_] + val
        return A

    A_eq = dense(er, ec, ev, len(beq))
    A_ub = dense(ur, uc, uv, len(bub))
    c = np.array(lp["c"], dtype=dtype)
    if exact:
        c = np.array([Fraction(v) for v in lp["c"]], dtype=object)
    return linprog.solve(c, A_ub, np.array(bub, dtype=dtype), A_eq, np.array(beq, dtype=dtype),
                         lp["free"], exact=exact)


def _pair_ratios(family: RetractionFamily, amb, L):
    N = len(family)
    out = np.zeros((N, N))
    for x in range(N):
        for y in range(x + 1, N):
            val, _ = w1_norm_primal(family.difference(x, y))
            r = val / (L * amb[x, y]) if amb[x, y] > 0 else (0.0 if val == 0 else np.inf)
            out[x, y] = out[y, x] = r
    return out


def _closeness_values(family, instance):
    tgt = _closeness_targets(instance, family.kind)
    out = np.zeros(len(instance.subset))
    for w, x in enumerate(instance.subset):
        d = family.weights[x] - tgt[w]
        out[w], _ = w1_norm_primal(SignedMeasure(family.omega, d - d.sum() / d.size))
    return out


def _check_budget(instance, lp_budget, max_ambient, max_subset):
    N, k = instance.ambient.size, len(instance.subset)
    if N > max_ambient or k > max_subset:
        raise BudgetError(f"instance ({N} ambient, {k} subset points) exceeds the LP caps "
                          f"({max_ambient}, {max_subset})")
    pairs = len(implied_pairs(instance.ambient.dist))
    E = len(geodesic_free_edges(instance.omega.dist))
    if (pairs + k) * E > lp_budget:
        raise BudgetError(f"{(pairs + k) * E} flow variables exceed the LP budget {lp_budget}")


def _optimal(instance, eps_scale, kind, backend, lp_budget, max_ambient, max_subset):
    if not eps_scale > 0:
        raise ValueError("eps_scale must be positive")
    if backend not in ("highs", "simplex", "exact"):
        raise ValueError(f"unknown LP backend {backend!r}")
    _check_budget(instance, lp_budget, max_ambient, max_subset)
    lp = _build_lp(instance, eps_scale, kind, backend == "exact")
    res = _solve_lp(lp, backend)
    N, k = lp["N"], lp["k"]
    W = np.asarray(res.x[:N * k], dtype=float).reshape(N, k)
    A_star = res.fun if backend == "exact" else max(float(res.fun), 0.0) + 0.0
    if kind == "signed":
        W = W - W.mean(axis=1, keepdims=True)
    else:
        W = np.clip(W, 0.0, None)
        W = W / W.sum(axis=1, keepdims=True)
    family = RetractionFamily(instance.omega, W, kind)
    amb = instance.ambient.dist
    ratio = _pair_ratios(family, amb, instance.L)
    rho = max(1.0, float(ratio.max()) if ratio.size else 1.0)
    if rho > 1.0:
        # shrink all differences by 1/rho so every Lipschitz constraint holds
        if kind == "signed":
            W = W / rho
        else:
            nu_row = instance.nu[None, :]
            W = W / rho + (1.0 - 1.0 / rho) * nu_row
        family = RetractionFamily(instance.omega, W, kind)
        ratio = ratio / rho
    close = _closeness_values(family, instance)
    scale = eps_scale * instance.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(scale > 0, close / scale, np.where(close > 1e-12, np.inf, 0.0))
    certified = float(per.max())
    a_f = float(A_star)
    binding_pairs = [[int(x), int(y), float(ratio[x, y])] for x, y in lp["pairs"]
                     if ratio[x, y] >= 1.0 - 1e-6]
    binding_close = [[int(w), float(close[w])] for w in range(k)
                     if close[w] >= a_f * scale[w] * (1.0 - 1e-6) - 1e-12 and a_f > 0]
    return UniformErrorResult(
        A_star=A_star, certified_A=certified, family=family, eps_scale=float(eps_scale),
        backend=backend, pair_ratio=ratio, closeness=close, rescale=rho,
        lp_variables=lp["n_var"], lp_constraints=len(lp["eq"][3]) + len(lp["ub"][3]),
        binding_pairs=binding_pairs, binding_closeness=binding_close)


def optimal_uniform_error(instance: ExtensionInstance, eps_scale=1.0, *, backend="highs",
                          lp_budget=DEFAULT_LP_BUDGET, max_ambient=MAX_AMBIENT,
                          max_subset=MAX_SUBSET) -> UniformErrorResult:
    """Smallest ``A`` admitting a zero-mass retraction family.

    Parameters
    ----------
    backend : {"highs", "simplex", "exact"}
        ``"highs"`` uses scipy's HiGHS on the sparse LP; ``"simplex"`` the
        in-repo dense Bland simplex; ``"exact"`` the same simplex over
        rationals (tiny instances only).

    Raises
    ------
    BudgetError
        Instance larger than the caps.
    """
    return _optimal(instance, eps_scale, "signed", backend, lp_budget, max_ambient, max_subset)


def optimal_uniform_error_convex(instance: ExtensionInstance, eps_scale=1.0, *, backend="highs",
                                 lp_budget=DEFAULT_LP_BUDGET, max_ambient=MAX_AMBIENT,
                                 max_subset=MAX_SUBSET) -> UniformErrorResult:
    """Same LP with probability measures and closeness to ``delta_w``.

    The resulting extension takes values in the convex hull of ``f(Omega)``.
    """
    return _optimal(instance, eps_scale, "probability", backend, lp_budget, max_ambient,
                    max_subset)


def w1_norm_on(omega: FiniteMetricSpace):
    """Norm oracle for vectors in W1(omega)."""

    def norm(v):
        v = np.asarray(v, dtype=float)
        return w1_norm_primal(SignedMeasure(omega, v - v.sum() / v.size))[0]

    return norm


def lq_norm(q):
    def norm(v):
        return float(np.linalg.norm(np.asarray(v, dtype=float), ord=q))

    return norm


def lipschitz_ratio(values, dist, norm):
    """``max ||f(a) - f(b)|| / d(a, b)`` and the pair attaining it."""
    best, arg = 0.0, None
    m = len(values)
    for a in range(m):
        for b in range(a + 1, m):
            if dist[a, b] <= 0:
                continue
            r = norm(values[a] - values[b]) / dist[a, b]
            if r > best:
                best, arg = r, (a, b)
    return best, arg


def construct_extension(family: RetractionFamily, f_values, nu=None, *, norm=None,
                        check=True, tol=1e-9):
    """Values ``F(x)`` for every ambient point.

    ``F(x) = sum_w mu_x(w) f(w) + sum_w nu(w) f(w)`` for a signed family and
    ``F(x) = sum_w mu_x(w) f(w)`` for a probability family.

    Parameters
    ----------
    f_values : array (k, m)
        ``f(w)`` for each subset point, in some normed space ``R^m``.
    norm : callable, optional
        Norm of the target; defaults to W1 over the subset (``m == k``).

    Raises
    ------
    ValueError
        If ``f`` is not 1-Lipschitz; the message names a violating pair.
    """
    f = np.asarray(f_values, dtype=float)
    k = family.omega.size
    if f.ndim == 1:
        f = f[:, None]
    if f.shape[0] != k:
        raise ValueError("one target value per subset point is required")
    if check:
        norm = norm or w1_norm_on(family.omega)
        dist = family.omega.dist
        for a in range(k):
            for b in range(a + 1, k):
                gap = norm(f[a] - f[b])
                if gap > dist[a, b] * (1.0 + tol) + tol:
                    raise ValueError(f"f is not 1-Lipschitz: pair ({a}, {b}) has "
                                     f"||f(a)-f(b)|| = {gap:.6g} > d = {dist[a, b]:.6g}")
    F = family.weights @ f
    if family.kind == "signed":
        nu = np.full(k, 1.0 / k) if nu is None else np.asarray(nu, dtype=float)
        F = F + nu @ f
    return F


@dataclass
class EquivalenceReport:
    trials: int
    passed: bool
    max_lipschitz_ratio: float
    max_error_excess: float
    violations: list
    seed: int

    def to_dict(self):
        return dict(trials=self.trials, passed=self.passed,
                    max_lipschitz_ratio=self.max_lipschitz_ratio,
                    max_error_excess=self.max_error_excess, violations=self.violations,
                    seed=self.seed)


class PreconditionError(ValueError):
    pass


def check_family(instance: ExtensionInstance, family: RetractionFamily, A, eps_scale=1.0,
                 tol=1e-9):
    """Raise :class:`PreconditionError` unless the family satisfies both constraint sets."""
    ratio = _pair_ratios(family, instance.ambient.dist, instance.L)
    amb = instance.ambient.dist
    for x in range(len(family)):
        for y in range(x + 1, len(family)):
            bound = instance.L * amb[x, y]
            if ratio[x, y] * bound > bound + tol:
                raise PreconditionError(f"Lipschitz constraint fails on ambient pair ({x}, {y}): "
                                        f"ratio {ratio[x, y]:.9g}")
    close = _closeness_values(family, instance)
    allowed = float(A) * eps_scale * instance.alpha
    bad = np.flatnonzero(close > allowed + tol)
    if bad.size:
        w = int(bad[0])
        raise PreconditionError(f"closeness constraint fails at subset point {w}: "
                                f"{close[w]:.9g} > {allowed[w]:.9g}")
    return ratio, close


def random_lipschitz_target(omega: FiniteMetricSpace, rng, *, kind="w1", m=None, q=2.0):
    """Random 1-Lipschitz map from ``omega`` into W1(omega) (``kind="w1"``) or l_q^m.

    W1 targets mix the identity ``w -> delta_w`` with a random Markov kernel
    and are normalised by their exact Lipschitz constant.
    """
    k = omega.size
    if kind == "w1":
        t = rng.uniform()
        K = t * np.eye(k) + (1.0 - t) * rng.dirichlet(np.full(k, 0.5), size=k)
        G = K - K.mean(axis=0, keepdims=True)
        norm = w1_norm_on(omega)
    else:
        m = m or k
        G = rng.standard_normal((k, m))
        norm = lq_norm(q)
    lip, _ = lipschitz_ratio(G, omega.dist, norm)
    if lip > 0:
        G = G / lip
    return G, norm


def _one_trial(args):
    instance, family, allowed, child, kind = args
    rng = np.random.default_rng(child)
    omega = family.omega
    f, norm = random_lipschitz_target(omega, rng, kind=kind)
    F = construct_extension(family, f, instance.nu, norm=norm, check=True)
    amb = instance.ambient.dist
    N = len(family)
    worst_ratio, worst_excess, bad = 0.0, -np.inf, []
    for x in range(N):
        for y in range(x + 1, N):
            gap = norm(F[x] - F[y])
            bound = instance.L * amb[x, y]
            if bound > 0:
                worst_ratio = max(worst_ratio, gap / bound)
            if gap > bound + 1e-9:
                bad.append({"kind": "lipschitz", "pair": [x, y], "gap": gap, "bound": bound})
    for w, x in enumerate(instance.subset):
        err = norm(F[x] - f[w])
        worst_excess = max(worst_excess, err - allowed[w])
        if err > allowed[w] + 1e-9:
            bad.append({"kind": "error", "omega": w, "error": err, "allowed": float(allowed[w])})
    return worst_ratio, worst_excess, bad


def verify_equivalence(instance: ExtensionInstance, family: RetractionFamily, A, trials=100,
                       seed=0, *, eps_scale=1.0, target="w1", workers=1) -> EquivalenceReport:
    """Build ``F`` from ``family`` for random 1-Lipschitz ``f`` and check both conclusions.

    The family is checked against ``A`` first; a violation raises
    :class:`PreconditionError`. Each trial gets its own spawned seed.
    """
    check_family(instance, family, A, eps_scale)
    allowed = float(A) * eps_scale * instance.alpha
    children = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(instance, family, allowed, ch, target) for ch in children]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(_one_trial, jobs))
    else:
        results = [_one_trial(j) for j in jobs]
    ratio = max((r[0] for r in results), default=0.0)
    excess = max((r[1] for r in results), default=0.0)
    violations = [v for r in results for v in r[2]]
    return EquivalenceReport(trials=trials, passed=not violations, max_lipschitz_ratio=float(ratio),
                             max_error_excess=float(excess), violations=violations[:50], seed=seed)
