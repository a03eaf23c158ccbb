"""Moving almost-extension data between unit spheres of different normed spaces.

A linear ``T: X -> Y`` with ``||x|| <= ||Tx|| <= D ||x||`` induces mutually
inverse sphere maps ``phi(x) = Tx / ||Tx||`` and ``phi^{-1}(y) = T^{-1}y / ||T^{-1}y||``,
each ``2D``-Lipschitz by the normalisation bound. Their positively homogeneous
extension is ``5D``-Lipschitz. Given a ``K``-Lipschitz retraction ``psi`` of
``S_Y`` onto a subspace ``V`` containing ``T(X)``, a 1-Lipschitz ``f`` on a net
of ``S_X`` is pushed to a 1-Lipschitz ``g`` on a net of ``S_Y``.

Continuum statements are verified on samples; statements about finite nets
are verified on all pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .metric import PointCloud, lp_norm, pairwise_distances, parse_p, sample_sphere

TOL = 1e-12


def normalization_gap(u, v, p=2.0):
    """``(||u/|u| - v/|v|||, 2||u - v|| / max(|u|, |v|))`` in l_p."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = float(lp_norm(u, p)), float(lp_norm(v, p))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("normalization needs nonzero vectors")
    lhs = float(lp_norm(u / nu - v / nv, p))
    rhs = 2.0 * float(lp_norm(u - v, p)) / max(nu, nv)
    return lhs, rhs


def normalization_gap_check(p=2.0, pairs=100_000, dim=4, seed=0, tol=1e-12):
    """Normalisation bound on random pairs: independent directions and scales
    (norm ratios up to 1e3) mixed with near-parallel and near-identical pairs."""
    p = parse_p(p)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((pairs, dim)) * np.exp(rng.uniform(-3, 3, (pairs, 1)))
    v = rng.standard_normal((pairs, dim)) * np.exp(rng.uniform(-3, 3, (pairs, 1)))
    k = pairs // 3
    v[:k] = u[:k] * rng.uniform(0.1, 10, (k, 1)) + 1e-4 * rng.standard_normal((k, dim))
    v[k:2 * k] = u[k:2 * k] + 1e-8 * rng.standard_normal((k, dim))
    nu, nv = lp_norm(u, p), lp_norm(v, p)
    lhs = lp_norm(u / nu[:, None] - v / nv[:, None], p)
    rhs = 2.0 * lp_norm(u - v, p) / np.maximum(nu, nv)
    excess = lhs - rhs
    return {"p": p, "pairs": pairs, "seed": seed, "ok": bool(excess.max() <= tol),
            "violations": int((excess > tol).sum()), "worst_excess": float(excess.max()),
            "max_ratio": float((lhs / np.where(rhs > 0, rhs, np.inf)).max())}


def _equiv(m, a, b):
    """Smallest ``c`` with ``||v||_a <= c ||v||_b`` on R^m."""
    ia = 0.0 if math.isinf(a) else 1.0 / a
    ib = 0.0 if math.isinf(b) else 1.0 / b
    return m ** max(0.0, ia - ib)


def _operator_norm(T, p, q):
    """Exact ``||T||_{p->q}`` for ``p = q`` in {1, 2, inf}; ``None`` otherwise."""
    if p == q == 2.0:
        return float(np.linalg.svd(T, compute_uv=False).max())
    if p == q == 1.0:
        return float(np.abs(T).sum(axis=0).max())
    if p == q == math.inf:
        return float(np.abs(T).sum(axis=1).max())
    return None


@dataclass(frozen=True)
class LinearOperatorSpec:
    """Injective linear map ``T: l_p^n -> l_q^m`` with ``||x|| <= ||Tx|| <= D ||x||``.

    Build with :meth:`from_matrix`, which rescales so that the lower bound is 1
    and certifies ``D`` (exactly for square maps with ``p = q`` in {1, 2, inf}
    and for ``p = q = 2`` in general, otherwise through norm equivalence with l_2).
    """

    matrix: np.ndarray
    source_p: float
    target_p: float
    D: float
    cond: float
    exact: bool

    @classmethod
    def from_matrix(cls, B, source_p=2.0, target_p=2.0):
        T = np.array(B, dtype=float)
        if T.ndim != 2 or T.shape[0] < T.shape[1]:
            raise ValueError("matrix must be m x n with m >= n")
        p, q = parse_p(source_p), parse_p(target_p)
        m, n = T.shape
        sv = np.linalg.svd(T, compute_uv=False)
        if sv.min() <= 1e-12 * sv.max():
            raise ValueError("matrix is not injective")
        cond = float(sv.max() / sv.min())
        upper = _operator_norm(T, p, q)
        lower = None
        if upper is not None and m == n:
            lower = 1.0 / _operator_norm(np.linalg.inv(T), q, p)
        elif p == q == 2.0:
            lower = float(sv.min())
        if upper is not None and lower is not None:
            exact = True
        else:
            # ||Tx||_q >= ||Tx||_2 / c(2,q) >= s_min ||x||_2 / c(2,q) >= s_min ||x||_p / (c(2,q) c(p,2))
            lower = float(sv.min()) / (_equiv(m, 2.0, q) * _equiv(n, p, 2.0))
            upper = float(sv.max()) * _equiv(m, q, 2.0) * _equiv(n, 2.0, p)
            exact = False
        T = T / lower
        return cls(T, p, q, float(upper / lower), cond, exact)

    @property
    def dim(self):
        return self.matrix.shape[1]

    def apply(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T

    def inverse(self, y):
        """Left inverse on the range of ``T``."""
        sol, *_ = np.linalg.lstsq(self.matrix, np.asarray(y, dtype=float).T, rcond=None)
        return sol.T

    def phi(self, x):
        y = self.apply(x)
        return y / lp_norm(y, self.target_p)[..., None]

    def phi_inv(self, y):
        x = self.inverse(y)
        return x / lp_norm(x, self.source_p)[..., None]


def _sphere_pairs(rng, count, dim, p, close_fraction=0.5, scale=1e-2):
    """Random pairs on ``S(l_p^dim)``; a fraction are nearby (relative perturbation ``scale``)."""
    x = sample_sphere(rng, count, dim, p)
    y = sample_sphere(rng, count, dim, p)
    k = int(count * close_fraction)
    if k:
        near = x[:k] + scale * rng.uniform(0, 1, (k, 1)) * rng.standard_normal((k, dim))
        y[:k] = near / lp_norm(near, p)[:, None]
    return x, y


def sphere_map_check(op: LinearOperatorSpec, pairs=10_000, seed=0, tol=1e-10):
    """Sampled check of both ``2D`` bounds, the inverse identity and the two-sided bound on ``T``."""
    rng = np.random.default_rng(seed)
    p, q = op.source_p, op.target_p
    x, xp = _sphere_pairs(rng, pairs, op.dim, p)
    ratio = lp_norm(op.apply(x), q)
    spec_ok = bool(ratio.min() >= 1.0 - TOL and ratio.max() <= op.D * (1.0 + TOL))
    dphi = lp_norm(op.phi(x) - op.phi(xp), q)
    dx = lp_norm(x - xp, p)
    phi_excess = dphi - 2.0 * op.D * dx
    # pairs on the image sphere: images of fresh source samples
    s, sp = _sphere_pairs(rng, pairs, op.dim, p)
    y, yp = op.phi(s), op.phi(sp)
    dinv = lp_norm(op.phi_inv(y) - op.phi_inv(yp), p)
    dy = lp_norm(y - yp, q)
    inv_excess = dinv - 2.0 * op.D * dy
    roundtrip = float(lp_norm(op.phi_inv(op.phi(x)) - x, p).max())
    with np.errstate(divide="ignore", invalid="ignore"):
        lip_phi = float(np.nanmax(np.where(dx > 0, dphi / dx, 0.0)))
        lip_inv = float(np.nanmax(np.where(dy > 0, dinv / dy, 0.0)))
    return {
        "pairs": pairs,
        "seed": seed,
        "D": op.D,
        "D_exact": op.exact,
        "operator_bound_ok": spec_ok,
        "operator_ratio_range": [float(ratio.min()), float(ratio.max())],
        "phi_ok": bool(phi_excess.max() <= tol),
        "phi_worst_excess": float(phi_excess.max()),
        "phi_measured_lipschitz": lip_phi,
        "phi_inverse_ok": bool(inv_excess.max() <= tol),
        "phi_inverse_worst_excess": float(inv_excess.max()),
        "phi_inverse_measured_lipschitz": lip_inv,
        "roundtrip_error": roundtrip,
        "roundtrip_ok": bool(roundtrip <= 1e-10),
        "bound": 2.0 * op.D,
    }


def homogeneous_extension(phi, source_p, target_dim=None):
    """``Phi(0) = 0``, ``Phi(x) = ||x|| phi(x / ||x||)`` for a vectorised sphere map ``phi``."""

    def Phi(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = lp_norm(x, source_p)
        out = np.zeros((x.shape[0], target_dim or x.shape[1]))
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz, None] * phi(x[nz] / r[nz, None])
        return out

    return Phi


def homogeneous_extension_check(phi, D, source_p, target_p, dim, pairs=10_000, seed=0,
                                ratio_max=1e3, target_dim=None, tol=1e-10):
    """Sampled check that the homogeneous extension of ``phi`` is ``5D``-Lipschitz.

    First confirms ``phi`` is ``2D``-Lipschitz on sphere pairs (precondition).
    Test pairs mix norm ratios up to ``ratio_max``, pairs straddling the origin
    (``y = -t x``) and pairs involving 0 itself.
    """
    rng = np.random.default_rng(seed)
    a, b = _sphere_pairs(rng, pairs, dim, source_p)
    pre = lp_norm(phi(a) - phi(b), target_p) - 2.0 * D * lp_norm(a - b, source_p)
    pre_ok = bool(pre.max() <= tol)
    Phi = homogeneous_extension(phi, source_p, target_dim)
    u = sample_sphere(rng, pairs, dim, source_p)
    v = sample_sphere(rng, pairs, dim, source_p)
    r1 = np.exp(rng.uniform(0, math.log(ratio_max), pairs))
    r2 = np.exp(rng.uniform(0, math.log(ratio_max), pairs))
    x = u * r1[:, None]
    y = v * r2[:, None] / ratio_max
    third = pairs // 3
    y[:third] = -rng.uniform(0, 2, (third, 1)) * x[:third]          # straddle 0
    y[third:third + 10] = 0.0                                        # at 0
    close = slice(third + 10, 2 * third)
    y[close] = x[close] * (1 + 1e-3 * rng.standard_normal((2 * third - third - 10, 1))) \
        + 1e-3 * rng.standard_normal((2 * third - third - 10, dim))
    gap = lp_norm(Phi(x) - Phi(y), target_p)
    dxy = lp_norm(x - y, source_p)
    excess = gap - 5.0 * D * dxy
    zero_ok = bool(np.abs(lp_norm(Phi(x), target_p) - lp_norm(x, source_p)).max() <= 1e-9 * ratio_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        lip = float(np.nanmax(np.where(dxy > 0, gap / dxy, 0.0)))
    return {
        "pairs": pairs,
        "seed": seed,
        "precondition_ok": pre_ok,
        "precondition_worst_excess": float(pre.max()),
        "ok": bool(pre_ok and excess.max() <= tol),
        "worst_excess": float(excess.max()),
        "measured_lipschitz": lip,
        "bound": 5.0 * D,
        "norm_preserved": zero_ok,
    }


def orthogonal_retraction(U):
    """``psi(y) = U U^T y``: 1-Lipschitz in l_2 and the identity on the span of ``U``."""
    U = np.asarray(U, dtype=float)
    P = U @ U.T
    return lambda y: np.asarray(y, dtype=float) @ P.T


def coordinate_contraction(rng, dim, scale=3.0):
    """Random ``f(x)_i = sin(c_i x_i + d_i) / c_i``: 1-Lipschitz from l_p to l_p for every p."""
    c = rng.uniform(0.5, scale, dim)
    d = rng.uniform(-math.pi, math.pi, dim)
    return lambda x: np.sin(np.asarray(x, dtype=float) * c + d) / c


def guaranteed_g_constant(K, D):
    """``1/(9D) + 2/9 + 2(2K + 1)/(9K)``; at most 1 when ``K, D >= 1``."""
    return 1.0 / (9 * D) + 2.0 / 9 + 2.0 * (2 * K + 1) / (9 * K)


def transfer_g_construction(f, net: PointCloud, op: LinearOperatorSpec, eps, *, psi=None, K=1.0,
                            z_p=None, a0=0, ambient_dim=None, M=None, seed=0,
                            max_candidates=200_000, psi_samples=2000, tol=1e-9):
    """Push a 1-Lipschitz ``f`` on a net ``N`` of ``S_X`` to ``g`` on a net ``M`` of ``S_Y``.

    ``g(alpha) = |psi(alpha)| / (18KD) * (f(nu(phi^{-1}(psi(alpha)/|psi(alpha)|))) - f(a0)) + f(a0)``
    and ``g(alpha) = f(a0)`` where ``psi(alpha) = 0``; ``nu`` is the nearest net
    point. ``M`` is a maximal ``eps/(2D)``-separated set of ``S_Y`` grown from
    ``phi(N)`` unless supplied.

    Parameters
    ----------
    f : callable
        1-Lipschitz from ``S_X`` into ``l_{z_p}`` (vectorised over rows).
    psi : callable, optional
        ``K``-Lipschitz map ``S_Y -> V`` fixing ``S_V``; default identity (``V = Y``).

    Returns
    -------
    dict
        ``g`` values and the verification report (exhaustive over pairs of ``M``).
    """
    p, q = op.source_p, op.target_p
    z_p = p if z_p is None else parse_p(z_p)
    D = op.D
    m = ambient_dim or op.matrix.shape[0]
    psi = psi or (lambda y: np.asarray(y, dtype=float))
    N = net.points
    if net.p != p:
        raise ValueError("net must live on the source sphere")
    rng = np.random.default_rng(seed)

    # contract of psi: identity on S_V (sampled), K-Lipschitz on S_Y (sampled)
    sv = op.phi(sample_sphere(rng, psi_samples, op.dim, p))
    fix_err = float(lp_norm(psi(sv) - sv, q).max())
    ya, yb = _sphere_pairs(rng, psi_samples, m, q)
    psi_excess = float((lp_norm(psi(ya) - psi(yb), q) - K * lp_norm(ya - yb, q)).max())
    psi_ok = fix_err <= 1e-10 and psi_excess <= tol

    phiN = op.phi(N)
    sep_target = eps / (2.0 * D)
    dphi = pairwise_distances(phiN, q)
    np.fill_diagonal(dphi, np.inf)
    phiN_sep = float(dphi.min()) if len(N) > 1 else math.inf
    if M is None:
        cand = np.vstack([phiN, sample_sphere(rng, max_candidates, m, q)])
        mask = _kernels.greedy_select(cand, sep_target, float(q), len(N))
        M = cand[mask]
    M = np.asarray(M, dtype=float)

    fa0 = np.atleast_1d(f(N[a0:a0 + 1])[0])
    PsiM = psi(M)
    r = lp_norm(PsiM, q)
    on_fiber = r <= TOL
    dirs = np.zeros_like(PsiM)
    dirs[~on_fiber] = PsiM[~on_fiber] / r[~on_fiber, None]
    xs = np.zeros((len(M), op.dim))
    xs[~on_fiber] = op.phi_inv(dirs[~on_fiber])
    dN = pairwise_distances(xs, p, N)
    nu_idx = np.argmin(dN, axis=1)
    resid = dN[np.arange(len(M)), nu_idx]
    resid[on_fiber] = 0.0
    fN = np.atleast_2d(f(N))
    if fN.shape[0] != len(N):
        fN = fN.T
    g = np.tile(fa0, (len(M), 1)).astype(float)
    scale = r / (18.0 * K * D)
    g[~on_fiber] = scale[~on_fiber, None] * (fN[nu_idx[~on_fiber]] - fa0) + fa0

    # rescaling identity on phi(N) (the first len(N) rows when M was grown here)
    idx_phiN = np.argmin(pairwise_distances(phiN, q, M), axis=1)
    ident = g[idx_phiN] - fa0 - (fN - fa0) / (18.0 * K * D)
    ident_err = float(np.abs(ident).max())

    # exhaustive 1-Lipschitz check and the three-term bound
    dM = pairwise_distances(M, q)
    dg = pairwise_distances(g, z_p)
    iu = np.triu_indices(len(M), 1)
    ratios = dg[iu] / dM[iu]
    best = float(ratios.max()) if ratios.size else 0.0
    lip_bad = np.flatnonzero(dg[iu] > dM[iu] + tol)
    # order each pair so the first point is off the fiber
    i, j = iu
    swap = on_fiber[i]
    a_, b_ = np.where(swap, j, i), np.where(swap, i, j)
    both_fiber = on_fiber[a_]
    ddir = lp_norm(dirs[a_] - dirs[b_], q)
    ddir[on_fiber[b_]] = 0.0
    rb = np.where(on_fiber[b_], 0.0, r[b_])
    t1 = dM[a_, b_] / (9.0 * D)
    t2 = rb / (9.0 * K) * ddir
    t3 = rb / (9.0 * K * D) * np.maximum(resid[a_], resid[b_])
    three = dg[a_, b_] - (t1 + t2 + t3)
    three[both_fiber] = -np.inf
    three_ok = bool(three.max() <= tol) if three.size else True

    dens = float(resid.max()) if len(resid) else 0.0
    return {
        "g": g,
        "M": M,
        "report": {
            "N_size": int(len(N)),
            "M_size": int(len(M)),
            "D": D,
            "K": float(K),
            "eps": float(eps),
            "psi_contract_ok": bool(psi_ok),
            "psi_fix_error": fix_err,
            "psi_lipschitz_excess": psi_excess,
            "phi_net_separation": phiN_sep,
            "phi_net_separated": bool(phiN_sep >= sep_target * (1 - 1e-12)),
            "max_net_residual": dens,
            "net_residual_ok": bool(dens <= eps * (1 + 1e-12)),
            "g_lipschitz_ok": not lip_bad.size,
            "g_violations": [[int(i[k]), int(j[k])] for k in lip_bad[:20]],
            "measured_best_constant": best,
            "guaranteed_constant": guaranteed_g_constant(K, D),
            "rescaling_identity_error": ident_err,
            "rescaling_identity_ok": bool(ident_err <= 1e-12 * max(1.0, float(np.abs(fN).max()))),
            "three_term_ok": three_ok,
            "three_term_worst_excess": float(three.max()) if three.size else 0.0,
            "fiber_points": int(on_fiber.sum()),
        },
    }
