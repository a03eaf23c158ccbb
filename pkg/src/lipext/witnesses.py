"""Snowflake witness maps, the hypercube diagonal inequality and lower-bound certificates.

A witness map ``f`` sends an ``eps``-separated subset of the unit sphere of
``l_p^n`` into a space of Enflo type ``q`` with distances

    ||f(a) - f(b)|| = eps**(1 - p/q) * ||a - b||_p**(p/q)

(the crinkled arc for ``p = 1``, a power of the Hilbert helix otherwise).
Such ``f`` is 1-Lipschitz on the separated set, and any ``L``-Lipschitz
``F`` on the whole space must stray from it somewhere: comparing hypercube
edges with diagonals gives an explicit lower bound ``B`` on
``max_a ||F(a) - f(a)||``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import bisect

from .metric import MAX_HYPERCUBE_DIM, PointCloud, lp_norm, pairwise_distances, parse_p, vertex_signs

SEPARATION_TOL = 1e-12


def crinkled_distance(s, t, p=1.0):
    """``|s - t|**(1/p)``: L_p distance between the indicators of ``[min(s,0), max(s,0)]`` and the same for ``t``."""
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float)) ** (1.0 / p)


def crinkled_quadrature(s, t, p=1.0):
    """L_p distance of the two indicator functions by adaptive quadrature (test oracle).

    The integrand is piecewise constant, so the jump points are passed as
    breakpoints and the integral is exact to rounding.
    """
    from scipy.integrate import quad

    lo, hi = min(s, t, 0.0), max(s, t, 0.0)
    if hi == lo:
        return 0.0

    def ind(x, u):
        return 1.0 if min(u, 0.0) <= x <= max(u, 0.0) else 0.0

    val, _ = quad(lambda x: abs(ind(x, s) - ind(x, t)) ** p, lo, hi,
                  points=sorted({s, t, 0.0} - {lo, hi}) or None, epsabs=1e-13, epsrel=1e-13)
    return val ** (1.0 / p)


@dataclass(frozen=True)
class WitnessMap:
    """Closed-form distance function of the snowflake witness on ``domain``."""

    kind: str
    p: float
    q: float
    eps: float
    domain: PointCloud | None = None

    def __post_init__(self):
        if self.kind not in ("crinkled", "helix"):
            raise ValueError(f"unknown witness kind {self.kind!r}")
        p = 1.0 if self.kind == "crinkled" else parse_p(self.p)
        object.__setattr__(self, "p", p)
        if self.q < p:
            raise ValueError(f"q = {self.q} is below p = {p}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def exponent(self):
        return self.p / self.q

    def from_distance(self, d):
        return self.eps ** (1.0 - self.exponent) * np.asarray(d, dtype=float) ** self.exponent

    def image_distance(self, a, b):
        """Distance between the images of ``a`` and ``b`` (vectors or domain indices)."""
        if np.isscalar(a) and self.domain is not None:
            a, b = self.domain.points[int(a)], self.domain.points[int(b)]
        return float(self.from_distance(lp_norm(np.asarray(a, float) - np.asarray(b, float), self.p)))

    def image_distances(self, points=None):
        pts = self.domain.points if points is None else np.asarray(points, dtype=float)
        return self.from_distance(pairwise_distances(pts, self.p))

    def lipschitz_violations(self, points=None, tol=1e-12):
        """Pairs at distance ``>= eps`` whose image distance exceeds the domain distance."""
        pts = self.domain.points if points is None else np.asarray(points, dtype=float)
        d = pairwise_distances(pts, self.p)
        img = self.from_distance(d)
        bad = np.argwhere((d >= self.eps) & (img > d * (1.0 + tol)))
        return [(int(i), int(j)) for i, j in bad if i < j]


def helix_embed(samples, theta, tol=1e-8) -> PointCloud:
    """Points of l_2 whose pairwise distances are ``|s_i - s_j|**theta``.

    Factorises the Gram matrix ``G_ij = (|s_i|^{2t} + |s_j|^{2t} - |s_i - s_j|^{2t}) / 2``
    (base point 0) via its eigendecomposition.

    Raises
    ------
    ValueError
        ``theta`` outside (0, 1), repeated samples, or an eigenvalue below ``-tol``.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    s = np.asarray(samples, dtype=float).ravel()
    if np.unique(s).size != s.size:
        raise ValueError("samples must be distinct")
    a = np.abs(s) ** (2 * theta)
    G = 0.5 * (a[:, None] + a[None, :] - np.abs(s[:, None] - s[None, :]) ** (2 * theta))
    lam, V = np.linalg.eigh(G)
    scale = max(1.0, float(np.abs(lam).max())) if lam.size else 1.0
    if lam.size and lam.min() < -tol * scale:
        raise ValueError(f"Gram matrix has eigenvalue {lam.min():.3e}")
    keep = lam > 0.0  # small positive modes still carry short distances
    X = V[:, keep] * np.sqrt(lam[keep])
    if X.shape[1] == 0:
        X = np.zeros((s.size, 1))
    return PointCloud(X, p=2.0)


@dataclass(frozen=True)
class EnfloResult:
    lhs: float
    rhs: float
    ok: bool
    worst_vertex: int
    worst_edge: tuple


def enflo_check(values, q, n=None, tol=1e-9) -> EnfloResult:
    """Shortest diagonal versus ``n**(1/q)`` times the longest edge, in l_q.

    ``values[k]`` is the image of vertex ``k`` in the ordering of
    :func:`lipext.metric.vertex_signs` (bit ``j`` set means coordinate ``j`` is -1).
    """
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    size = V.shape[0]
    if n is None:
        n = int(round(math.log2(size))) if size else 0
    if size != 2 ** n or n < 1:
        raise ValueError(f"need the image of all 2**n vertices, got {size}")
    idx = np.arange(size)
    diag = lp_norm(V - V[size - 1 - idx], q)
    worst_v = int(np.argmin(diag))
    lhs = float(diag[worst_v])
    max_edge, arg = 0.0, (0, 0)
    for j in range(n):
        e = lp_norm(V - V[idx ^ (1 << j)], q)
        k = int(np.argmax(e))
        if e[k] > max_edge:
            max_edge, arg = float(e[k]), (k, j)
    rhs = n ** (1.0 / q) * max_edge
    return EnfloResult(lhs, rhs, bool(lhs <= rhs + tol), worst_v, arg)


class HypothesisError(ValueError):
    """The dimension is too small for the parameter regime."""


@dataclass(frozen=True)
class Parameters:
    n: int
    L: float
    q: float
    eps: float
    mode: str
    hypothesis_ok: bool
    residual: float | None = None

    def in_range(self):
        return 0.0 < self.eps <= 0.5 and 1.0 < self.q <= 2.0


def stationarity_residual(n, L, q):
    """Log-form residual ``(1 - 1/q)^2 log n - log(2 q L)`` of the optimal-parameter equation."""
    return (1.0 - 1.0 / q) ** 2 * math.log(n) - math.log(2.0 * q * L)


def closed_form_parameters(n, L):
    """``eps = exp(sqrt(log n log 4L)) / n``, ``q = 1 / (1 - sqrt(log 4L / log n))``."""
    ln_n, ln_4l = math.log(n), math.log(4.0 * L)
    eps = math.exp(math.sqrt(ln_n * ln_4l)) / n
    q = 1.0 / (1.0 - math.sqrt(ln_4l / ln_n))
    return q, eps


def choose_parameters(n, L, mode="closed_form", *, enforce=True) -> Parameters:
    """Snowflake exponent ``q`` and scale ``eps`` for the l_1 certificate.

    ``closed_form`` needs ``5L <= n**(1/4)`` (checked unless ``enforce=False``).
    ``optimal`` solves ``n**((1 - 1/q)**2) = 2 q L`` for ``q`` in (1, 2] by
    bisection and sets ``eps = n**(-1/q)``.

    Raises
    ------
    HypothesisError
        Hypothesis violated (closed form) or no root in (1, 2] (optimal).
    """
    if n < 2 or not L > 0:
        raise ValueError("need n >= 2 and L > 0")
    hyp = 5.0 * L <= n ** 0.25
    if mode == "closed_form":
        if enforce and not hyp:
            raise HypothesisError(f"5L = {5 * L:g} exceeds n^(1/4) = {n ** 0.25:.6g}")
        if 4.0 * L <= 1.0:
            raise HypothesisError("closed form needs 4L > 1")
        q, eps = closed_form_parameters(n, L)
        return Parameters(n, float(L), q, eps, mode, hyp, stationarity_residual(n, L, q))
    if mode == "optimal":
        g = lambda q: stationarity_residual(n, L, q)  # noqa: E731
        lo, hi = 1.0 + 1e-15, 2.0
        if g(lo) > 0 or g(hi) < 0:
            raise HypothesisError(f"no root of the stationarity equation in (1, 2] for n={n}, L={L}")
        q = bisect(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return Parameters(n, float(L), q, n ** (-1.0 / q), mode, hyp, g(q))
    raise ValueError(f"unknown mode {mode!r}")


def lp_parameters(n, p, L, *, enforce=True):
    """Parameters for the l_p certificate: ``eps = exp(sqrt(log(4L)/p * log n)) / n`` and
    ``q = p / (1 - sqrt(p log(4L) / log n))``; requires ``n >= (5L)**(4p / (2-p)**2)``."""
    p = float(p)
    if not 1.0 <= p < 2.0:
        raise ValueError("p must lie in [1, 2)")
    hyp = n >= (5.0 * L) ** (4.0 * p / (2.0 - p) ** 2)
    if enforce and not hyp:
        raise HypothesisError(f"n = {n} is below (5L)^(4p/(2-p)^2) = "
                              f"{(5.0 * L) ** (4.0 * p / (2.0 - p) ** 2):.6g}")
    ln_n, ln_4l = math.log(n), math.log(4.0 * L)
    eps = math.exp(math.sqrt(ln_4l / p * ln_n)) / n
    q = p / (1.0 - math.sqrt(p * ln_4l / ln_n))
    return Parameters(n, float(L), q, eps, "lp", hyp, None)


@dataclass
class CertificateResult:
    """Evaluated inequality chain.

    ``lower_bound = max(0, (diagonal_floor - enflo_ceiling) / 2)`` bounds
    ``max_a ||F(a) - f(a)||`` from below for every L-Lipschitz ``F``.
    """

    lower_bound: float
    steps: dict
    parameters: dict
    matched_pairs: list = field(default_factory=list)
    idealized: bool = False

    def to_dict(self):
        return asdict(self)


def _nearest(points, targets, p, chunk=4096):
    """Nearest point index (lowest index on ties) and distance for each target."""
    idx = np.empty(len(targets), dtype=int)
    dist = np.empty(len(targets))
    for s in range(0, len(targets), chunk):
        d = pairwise_distances(targets[s:s + chunk], p, points)
        k = np.argmin(d, axis=1)  # argmin returns the first minimiser
        idx[s:s + chunk] = k
        dist[s:s + chunk] = d[np.arange(len(k)), k]
    return idx, dist


def certificate_lp(net, p, L, q, eps, *, n=None, check_separation=True,
                   auto_parameters=False, max_pairs_reported=64) -> CertificateResult:
    """Hypercube certificate for the snowflake witness on a net of ``S(l_p^n)``.

    Parameters
    ----------
    net : PointCloud or None
        ``None`` means idealised matching (each vertex and its antipode are in
        the net exactly); ``n`` must then be given.
    auto_parameters : bool
        Replace ``q`` and ``eps`` by :func:`lp_parameters` (hypothesis enforced).

    Raises
    ------
    ValueError
        Out-of-range exponents, a net that is not ``eps``-separated, or an
        unmatched vertex (no net point within ``eps``).
    HypothesisError
        With ``auto_parameters`` when ``n`` is too small.
    """
    p = parse_p(p)
    if net is not None:
        n = net.dim
        if net.p != p:
            raise ValueError(f"net is measured in l_{net.p}, certificate needs l_{p}")
    if n is None or n < 1:
        raise ValueError("hypercube dimension unknown")
    if auto_parameters:
        par = lp_parameters(n, p, L, enforce=True)
        q, eps = par.q, par.eps
    if not (p <= q <= 2.0):
        raise ValueError(f"need p <= q <= 2, got p={p}, q={q}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not L > 0:
        raise ValueError("L must be positive")
    wit = WitnessMap("helix" if p != 1.0 else "crinkled", p, q, eps)
    scale = n ** (-1.0 / p)
    edge = 2.0 * L * scale
    enflo = n ** (1.0 / q) * edge
    if net is None:
        # every vertex matches itself: a single representative row suffices
        size = 1
        floors = np.full(1, wit.from_distance(2.0))
        a_idx = b_idx = None
        r_a = r_b = np.zeros(1)
        gap = np.full(1, 2.0)
    else:
        if n > MAX_HYPERCUBE_DIM:
            raise ValueError(f"n = {n} exceeds the enumeration cap of {MAX_HYPERCUBE_DIM}")
        signs = vertex_signs(n)
        size = signs.shape[0]
        anti = size - 1 - np.arange(size)
        pts = net.points
        if check_separation and len(net) > 1:
            d = net.distances()
            np.fill_diagonal(d, np.inf)
            if d.min() < eps * (1.0 - SEPARATION_TOL):
                i, j = np.unravel_index(np.argmin(d), d.shape)
                raise ValueError(f"net is not eps-separated: points {i}, {j} at {d[i, j]:.6g}")
        vid, vdist = _nearest(pts, scale * signs, p)
        far = np.flatnonzero(vdist > eps * (1.0 + SEPARATION_TOL))
        if far.size:
            raise ValueError(f"vertex {int(far[0])} has no net point within eps "
                             f"(nearest at {vdist[far[0]]:.6g})")
        a_idx, b_idx = vid, vid[anti]
        r_a, r_b = vdist, vdist[anti]
        gap = lp_norm(pts[a_idx] - pts[b_idx], p)
        floors = wit.from_distance(gap) - L * (r_a + r_b)
    worst = int(np.argmin(floors))
    floor = float(floors[worst])
    raw = 0.5 * (floor - enflo)
    bound = max(0.0, raw)
    matched = []
    for k in range(min(size, max_pairs_reported)):
        entry = {"vertex": k, "floor": float(floors[k]), "residual_a": float(r_a[k]),
                 "residual_b": float(r_b[k]), "gap": float(gap[k])}
        if a_idx is not None:
            entry["a"] = int(a_idx[k])
            entry["b"] = int(b_idx[k])
        matched.append(entry)
    steps = {
        "edge_bound": edge,
        "enflo_ceiling": enflo,
        "diagonal_floor": floor,
        "worst_vertex": worst,
        "unclamped": raw,
    }
    params = {"n": int(n), "L": float(L), "p": float(p), "q": float(q), "eps": float(eps)}
    return CertificateResult(bound, steps, params, matched, net is None)


def certificate_l1(net, L, q, eps, *, n=None, check_separation=True) -> CertificateResult:
    """:func:`certificate_lp` with ``p = 1`` (crinkled-arc witness, edge bound ``2L/n``)."""
    if not 1.0 < q <= 2.0:
        raise ValueError("q must lie in (1, 2]")
    return certificate_lp(net, 1.0, L, q, eps, n=n, check_separation=check_separation)


def idealized_bound(n, L, q, eps, p=1.0):
    """``(eps**(1-p/q) 2**(p/q) - 2 L n**(1/q - 1/p)) / 2`` before clamping."""
    return 0.5 * (eps ** (1 - p / q) * 2 ** (p / q) - 2 * L * n ** (1 / q - 1 / p))


def closed_form_bound(n, L):
    """``(n exp(-2 sqrt(log n log 4L)) - 1) L eps*`` for the closed-form parameters."""
    q, eps = closed_form_parameters(n, L)
    return (n * math.exp(-2 * math.sqrt(math.log(n) * math.log(4 * L))) - 1) * L * eps


def hypercube_net_instance(n, p, eps, L, seed=0, extra=0):
    """Net of ``S(l_p^n)`` grown from the scaled hypercube vertices, plus ``extra``
    further sphere points that belong to the ambient space only.

    Returns ``(net, instance)``; the subset of the retraction instance is the net
    and the ambient metric is l_p on net + extra points.
    """
    from .metric import FiniteMetricSpace, build_eps_net, hypercube_points, sample_sphere
    from .retraction import ExtensionInstance

    net = build_eps_net(n, p, eps, seed=seed, anchors=hypercube_points(n, p).points)
    pts = net.points
    if extra:
        rng = np.random.default_rng([seed, 1])
        pts = np.vstack([pts, sample_sphere(rng, extra, n, p)])
    amb = FiniteMetricSpace(pairwise_distances(pts, p))
    return net, ExtensionInstance(amb, range(len(net)), L)
