"""Imbalance of measures on the Euclidean sphere and the moment/Lipschitz chain.

For a signed atomic measure ``mu`` on ``S^{n-1}`` the imbalance at direction
``z`` is ``sum_a mu(a) sign(<z, a>)`` (with ``sign(0) = 0``). Its projection
onto linear functions is proportional to the moment of ``mu``, which turns an
upper bound on the Lipschitz constant of a retraction family into an upper
bound on how far apart the moments of ``mu_x`` and ``mu_{-x}`` can be.

Sphere integrals are estimated by plain Monte Carlo with uniform directions
(normalised Gaussians), sharded over seeds spawned from one root seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .metric import FiniteMetricSpace, PointCloud, pairwise_distances
from .retraction import RetractionFamily
from .transport import SignedMeasure, w1_norm_primal

TIE_TOL = 1e-14
SIGMA = 3.0


def sphere_area(k, rho=1.0):
    """Surface measure of the radius-``rho`` sphere ``S^k`` in ``R^{k+1}``.

    ``2 pi^{(k+1)/2} / Gamma((k+1)/2) * rho**k``; ``S^0`` is two points
    (counting measure). Evaluated by the recursion ``A_k = 2 pi A_{k-2} / (k - 1)``
    from ``A_0 = 2``, ``A_1 = 2 pi`` so small cases are exact multiples of pi.
    """
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    if not rho > 0:
        raise ValueError("rho must be positive")
    a = 2.0 if k % 2 == 0 else 2.0 * math.pi
    for j in range(3 if k % 2 else 2, k + 1, 2):
        a = 2.0 * math.pi * a / (j - 1)
    return a * rho ** k


def linear_projection_coefficient(n):
    """``c_n`` with ``proj(imb_mu)(x) = c_n <x, Moment(mu)>`` on ``S^{n-1}``.

    ``c_n = 2 n A_{n-2} / ((n - 1) A_{n-1})``; equivalently
    ``int z_j imb_mu(z) dz = 2 A_{n-2} / (n - 1) * Moment_j``.
    """
    return 2.0 * n * sphere_area(n - 2) / ((n - 1) * sphere_area(n - 1))


def coordinate_integral_coefficient(n):
    """``int_{S^{n-1}} |z_1| dz = 2 A_{n-2} / (n - 1)``."""
    return 2.0 * sphere_area(n - 2) / (n - 1)


def stated_coordinate_coefficient(n):
    """The coefficient ``(2/n) A_{n-2}`` as it appears in the published computation."""
    return 2.0 * sphere_area(n - 2) / n


def imbalance_moment_constant(n, sharp=False):
    """Constant ``C`` in ``||imb_mu||_{L2} >= C ||Moment(mu)||_2``.

    Default: ``2 A_{n-2} / sqrt(n A_{n-1})``; ``sharp=True`` gives the Bessel
    constant ``c_n sqrt(A_{n-1} / n)``, larger by ``n / (n - 1)``.
    """
    if sharp:
        return linear_projection_coefficient(n) * math.sqrt(sphere_area(n - 1) / n)
    return 2.0 * sphere_area(n - 2) / math.sqrt(n * sphere_area(n - 1))


@dataclass(frozen=True)
class SphericalAtomicMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.array(self.atoms, dtype=float)
        if a.ndim != 2:
            raise ValueError("atoms must be a (k, n) array")
        w = np.array(self.weights, dtype=float).ravel()
        if w.size != a.shape[0]:
            raise ValueError("one weight per atom is required")
        if a.size and np.any(np.abs(np.linalg.norm(a, axis=1) - 1.0) > 1e-12):
            raise ValueError("atoms must lie on the unit sphere")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.atoms.shape[1]

    def moment(self):
        return self.weights @ self.atoms

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((0, n)), np.zeros(0))


def random_atomic_measure(rng, n, atoms=5):
    """Atoms uniform on ``S^{n-1}`` with standard normal signed weights."""
    a = rng.standard_normal((atoms, n))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    return SphericalAtomicMeasure(a, rng.standard_normal(atoms))


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self):
        return asdict(self)


def imbalance(mu: SphericalAtomicMeasure, z):
    """``sum_a mu(a) sign(<z, a>)``; ``z`` may be one direction or a stack of them."""
    z = np.asarray(z, dtype=float)
    return np.sign(z @ mu.atoms.T) @ mu.weights


def uniform_directions(rng, count, n, avoid=None):
    """Uniform points of ``S^{n-1}``, redrawn while ``|<z, a>| < 1e-14`` for an atom ``a``."""
    g = rng.standard_normal((count, n))
    z = g / np.linalg.norm(g, axis=1, keepdims=True)
    if avoid is not None and len(avoid):
        bad = np.any(np.abs(z @ avoid.T) < TIE_TOL, axis=1)
        while np.any(bad):
            z[bad] = uniform_directions(rng, int(bad.sum()), n)
            bad = np.any(np.abs(z @ avoid.T) < TIE_TOL, axis=1)
    return z


def mc_mean(fn, n, samples, seed, *, avoid=None, shards=8, chunk=1 << 16):
    """Mean and standard error of ``fn(Z)`` (rows of values) over uniform directions.

    Shards use seeds spawned from ``seed`` and are merged in a fixed order, so
    the result does not depend on how shards are scheduled.
    """
    children = np.random.SeedSequence(seed).spawn(shards)
    counts = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]
    tot_n, tot_mean, tot_m2 = 0, None, None
    for child, cnt in zip(children, counts):
        rng = np.random.default_rng(child)
        done = 0
        while done < cnt:
            m = min(chunk, cnt - done)
            vals = np.atleast_2d(np.asarray(fn(uniform_directions(rng, m, n, avoid)), dtype=float))
            if vals.shape[0] != m:
                vals = vals.T
            b_mean = vals.mean(axis=0)
            b_m2 = ((vals - b_mean) ** 2).sum(axis=0)
            if tot_mean is None:
                tot_n, tot_mean, tot_m2 = m, b_mean, b_m2
            else:
                delta = b_mean - tot_mean
                new_n = tot_n + m
                tot_mean = tot_mean + delta * (m / new_n)
                tot_m2 = tot_m2 + b_m2 + delta ** 2 * (tot_n * m / new_n)
                tot_n = new_n
            done += m
    var = tot_m2 / (tot_n - 1) if tot_n > 1 else np.zeros_like(tot_mean)
    return tot_mean, np.sqrt(var / tot_n)


def _deviation(est, se, pred, atol=1e-12):
    diff = abs(est - pred)
    if se > 0:
        return diff / se
    return 0.0 if diff <= atol else math.inf


def projection_identity_check(mu: SphericalAtomicMeasure, n=None, samples=1_000_000, seed=0):
    """Monte-Carlo ``int z_j imb_mu(z) dz`` against ``2 A_{n-2}/(n-1) * Moment_j``.

    The report also carries the coefficient ``(2/n) A_{n-2}`` from the published
    derivation and how many standard errors the estimate sits from it.
    """
    n = mu.dim if n is None else n
    if n < 2:
        raise ValueError("n must be >= 2")
    if mu.dim != n:
        raise ValueError("atoms do not live in R^n")
    area = sphere_area(n - 1)
    mean, se = mc_mean(lambda Z: Z * imbalance(mu, Z)[:, None], n, samples, seed,
                       avoid=mu.atoms)
    est, err = area * mean, area * se
    mom = mu.moment()
    pred = coordinate_integral_coefficient(n) * mom
    stated = stated_coordinate_coefficient(n) * mom
    coords = []
    for j in range(n):
        coords.append({
            "estimate": McEstimate(float(est[j]), float(err[j]), samples, seed).to_dict(),
            "predicted": float(pred[j]),
            "deviation_sigma": _deviation(est[j], err[j], pred[j]),
            "stated_prediction": float(stated[j]),
            "stated_deviation_sigma": _deviation(est[j], err[j], stated[j]),
        })
    worst = max(c["deviation_sigma"] for c in coords)
    return {
        "n": n,
        "seed": seed,
        "samples": samples,
        "projection_coefficient": linear_projection_coefficient(n),
        "stated_projection_coefficient": 2.0 * sphere_area(n - 2) / area,
        "coordinates": coords,
        "max_deviation_sigma": worst,
        "ok": bool(worst <= SIGMA),
    }


def imbalance_moment_check(mu: SphericalAtomicMeasure, n=None, samples=1_000_000, seed=0):
    """Monte-Carlo ``||imb_mu||_{L2}`` against ``C ||Moment(mu)||_2``.

    Passes when the estimate is at least the bound minus three standard errors.
    """
    n = mu.dim if n is None else n
    if n < 2:
        raise ValueError("n must be >= 2")
    area = sphere_area(n - 1)
    mean, se = mc_mean(lambda Z: imbalance(mu, Z)[:, None] ** 2, n, samples, seed,
                       avoid=mu.atoms)
    sq, sq_se = float(area * mean[0]), float(area * se[0])
    norm = math.sqrt(max(sq, 0.0))
    norm_se = sq_se / (2.0 * norm) if norm > 0 else 0.0
    mom = float(np.linalg.norm(mu.moment()))
    rhs = imbalance_moment_constant(n) * mom
    rhs_sharp = imbalance_moment_constant(n, sharp=True) * mom
    return {
        "n": n,
        "seed": seed,
        "samples": samples,
        "imbalance_l2": McEstimate(norm, norm_se, samples, seed).to_dict(),
        "moment_norm": mom,
        "bound": rhs,
        "sharp_bound": rhs_sharp,
        "constant": imbalance_moment_constant(n),
        "sharp_constant": imbalance_moment_constant(n, sharp=True),
        "margin_sigma": (norm - rhs) / norm_se if norm_se > 0 else (math.inf if norm >= rhs - 1e-12 else -math.inf),
        "ok": bool(norm >= rhs - SIGMA * norm_se - 1e-12),
        "sharp_ok": bool(norm >= rhs_sharp - SIGMA * norm_se - 1e-12),
    }


def antipode_index(points, tol=1e-12):
    """``idx[i]`` with ``points[idx[i]] == -points[i]``; raises if some antipode is missing."""
    P = np.asarray(points, dtype=float)
    d = pairwise_distances(P, 2.0, -P)  # d[i, j] = |P_i + P_j|
    idx = np.argmin(d, axis=0)
    bad = np.flatnonzero(d[idx, np.arange(len(P))] > tol)
    if bad.size:
        raise ValueError(f"point {int(bad[0])} has no antipode in the set")
    return idx


def psi_values(family: RetractionFamily, omega_points, anti, Z):
    """``psi_z(x) = imb_{mu_x - mu_{-x}}(z)`` as an array ``(len(Z), len(family))``."""
    D = family.weights - family.weights[anti]
    S = np.sign(np.asarray(Z, float) @ np.asarray(omega_points, float).T)
    return S @ D.T


def _net_separation(omega_points):
    d = pairwise_distances(omega_points, 2.0)
    np.fill_diagonal(d, np.inf)
    return float(d.min()) if d.size > 1 else math.inf


def psi_lipschitz_check(family: RetractionFamily, points, omega_points, eps, L, *,
                        directions=1000, pairs=1000, seed=0, tol=1e-9, csv_path=None):
    """Check ``|psi_z(x) - psi_z(y)|`` against both steps of its Lipschitz bound.

    ``kr_step``: ``<= (2/eps) ||mu_x - mu_{-x} - mu_y + mu_{-y}||_W1`` (needs
    ``omega_points`` to be ``eps``-separated); ``lipschitz``: ``<= (4L/eps) ||x - y||``
    (needs the family to be L-Lipschitz). Each is reported separately.
    """
    X = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    W = np.asarray(omega_points, dtype=float)
    if len(family) != len(X):
        raise ValueError("family must have one measure per point")
    anti = antipode_index(X)
    sep = _net_separation(W)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
    if np.ndim(directions) == 0:
        Z = uniform_directions(rng, int(directions), X.shape[1])
    else:
        Z = np.asarray(directions, dtype=float)
    N = len(X)
    if np.ndim(pairs) == 0:
        all_pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
        if len(all_pairs) > int(pairs):
            pick = np.sort(rng.choice(len(all_pairs), int(pairs), replace=False))
            all_pairs = [all_pairs[k] for k in pick]
        P = all_pairs
    else:
        P = [tuple(map(int, pr)) for pr in pairs]
    psi = psi_values(family, W, anti, Z)
    odd_gap = float(np.abs(psi + psi[:, anti]).max()) if psi.size else 0.0
    omega = family.omega
    kr_bad, lip_bad = [], []
    kr_worst, lip_worst = -math.inf, -math.inf
    for x, y in P:
        lam = (family.weights[x] - family.weights[anti[x]]) - (family.weights[y] - family.weights[anti[y]])
        w1, _ = w1_norm_primal(SignedMeasure(omega, lam - lam.sum() / lam.size))
        diff = np.abs(psi[:, x] - psi[:, y])
        kr = diff - 2.0 / eps * w1
        lip = diff - 4.0 * L / eps * float(np.linalg.norm(X[x] - X[y]))
        kr_worst = max(kr_worst, float(kr.max()))
        lip_worst = max(lip_worst, float(lip.max()))
        if kr.max() > tol:
            kr_bad.append([x, y, int(np.argmax(kr)), float(kr.max())])
        if lip.max() > tol:
            lip_bad.append([x, y, int(np.argmax(lip)), float(lip.max())])
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["direction", "point", "psi"])
            for a in range(psi.shape[0]):
                for x in range(N):
                    out.writerow([a, x, repr(float(psi[a, x]))])
    return {
        "directions": int(len(Z)),
        "pairs": len(P),
        "seed": seed,
        "net_separation": sep,
        "net_separated": bool(sep >= eps * (1 - 1e-12)),
        "odd_gap": odd_gap,
        "kr_step_ok": not kr_bad,
        "kr_step_worst_excess": kr_worst,
        "kr_step_violations": kr_bad[:20],
        "lipschitz_ok": not lip_bad,
        "lipschitz_worst_excess": lip_worst,
        "lipschitz_violations": lip_bad[:20],
    }


def moment_ceiling(n, L, eps):
    """Closed-form ``16 L / (eps sqrt n)`` and the area-exact ``sqrt(8) L A_{n-1} / (eps A_{n-2})``."""
    return 16.0 * L / (eps * math.sqrt(n)), math.sqrt(8.0) * L * sphere_area(n - 1) / (eps * sphere_area(n - 2))


def eps_min(n, L, A):
    return math.sqrt(8.0 * L) / math.sqrt(L + A + 1.0) * n ** -0.25


def retraction_floor(n, L):
    """``sqrt(n) / (32 L) - L - 1``."""
    return math.sqrt(n) / (32.0 * L) - L - 1.0


@dataclass
class CertificateReport:
    status: str
    steps: dict
    estimates: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def l2_chain_certificate(family: RetractionFamily, points, omega_points, eps, L, nu=None, *,
                         mc_samples=100_000, seed=0, tol=1e-9) -> CertificateReport:
    """Evaluate the Euclidean moment chain on a finite family.

    ``points`` is a symmetric sample ``X`` of ``S^{n-1}`` (rows of ``family``)
    and ``omega_points`` the net. Exact steps (per point of ``X``):

    * ``2 <= ||M_x - M_{-x}|| + W(mu_x, mu_a(x)) + W(mu_{-x}, mu_a(-x)) + c_a(x) + c_a(-x) + r_x + r_{-x}``
      where ``a(x)`` is the nearest net point, ``r`` its distance and ``c_a`` the
      closeness error ``||mu_a - delta_a + nu||``. This holds for every family.

    Continuum steps (ceiling ``16L/(eps sqrt n)``, terminal inequality
    ``2 <= 16L/(eps sqrt n) + 2(L + A + 1) eps`` and the floor on ``A``) are
    evaluated with the measured ``A`` and reported; Monte-Carlo surrogates of
    the sphere integrals come with standard errors.

    ``status`` is ``"violation"`` if an exact step fails, ``"inconclusive"`` if a
    Monte-Carlo comparison is within three standard errors or the terminal
    inequality fails on finite data, else ``"pass"``.
    """
    X = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float)
    W = np.asarray(omega_points, dtype=float)
    n = X.shape[1]
    k = W.shape[0]
    if len(family) != len(X):
        raise ValueError("family must have one measure per point")
    anti = antipode_index(X)
    nu = np.full(k, 1.0 / k) if nu is None else np.asarray(nu, dtype=float)
    omega = family.omega
    dX = pairwise_distances(X, 2.0)

    # measured Lipschitz constant of the family on X
    lip = 0.0
    for x in range(len(X)):
        for y in range(x + 1, len(X)):
            if dX[x, y] > 0:
                v, _ = w1_norm_primal(family.difference(x, y))
                lip = max(lip, v / dX[x, y])
    if lip > L * (1 + tol) + tol:
        raise ValueError(f"family is {lip:.9g}-Lipschitz on the sample, above L = {L}")

    # closeness errors on net points contained in X
    a_of, r_of = np.empty(len(X), dtype=int), np.empty(len(X))
    dXW = pairwise_distances(X, 2.0, W)
    a_of[:] = np.argmin(dXW, axis=1)
    r_of[:] = dXW[np.arange(len(X)), a_of]
    row_of_net = {}
    for w in range(k):
        hit = np.flatnonzero(np.abs(dXW[:, w]) <= 1e-12)
        if hit.size:
            row_of_net[w] = int(hit[0])
    if len(row_of_net) < k:
        raise ValueError("every net point must appear among the sample points")
    close = np.empty(k)
    for w in range(k):
        d = family.weights[row_of_net[w]] - (np.eye(k)[w] - nu)
        close[w], _ = w1_norm_primal(SignedMeasure(omega, d - d.sum() / d.size))
    A = float(close.max() / eps)

    M = family.weights @ W
    gaps = np.linalg.norm(M - M[anti], axis=1)
    near_w = np.empty(len(X))
    for x in range(len(X)):
        v, _ = w1_norm_primal(family.difference(x, row_of_net[int(a_of[x])]))
        near_w[x] = v
    rhs = gaps + near_w + near_w[anti] + close[a_of] + close[a_of[anti]] + r_of + r_of[anti]
    chain_slack = rhs - 2.0
    chain_ok = bool(chain_slack.min() >= -tol)

    ceil_cf, ceil_exact = moment_ceiling(n, L, eps)
    term_cl = 2.0 * (L + A + 1.0) * eps
    terminal_rhs = ceil_cf + term_cl
    terminal_ok = terminal_rhs >= 2.0 - tol
    finite_rhs = float(gaps.min()) + term_cl
    e_min = eps_min(n, L, A)
    floor = retraction_floor(n, L)
    hyp = 6.0 * L <= n ** 0.25

    # Monte-Carlo surrogates: mean over x in X of E_z psi_z(x)^2 against 32 L^2 / (n eps^2)
    anti_rows = anti
    est, se = mc_mean(lambda Z: psi_values(family, W, anti_rows, Z) ** 2, n, mc_samples, seed,
                      avoid=W)
    psi_sq = float(est.mean())
    psi_se = float(np.sqrt((se ** 2).mean() / len(se))) if len(se) else 0.0
    psi_bound = 32.0 * L ** 2 / (n * eps ** 2)
    psi_margin = (psi_bound - psi_sq) / psi_se if psi_se > 0 else math.inf
    # per-point imbalance/moment inequality, unit-area normalisation
    C = imbalance_moment_constant(n) / math.sqrt(sphere_area(n - 1))
    imb_l2 = np.sqrt(np.maximum(est, 0.0))
    imb_se = np.where(imb_l2 > 0, se / (2 * np.maximum(imb_l2, 1e-300)), 0.0)
    imb_margin = imb_l2 - C * gaps
    imb_fail = np.flatnonzero(imb_margin < -SIGMA * imb_se - tol)
    imb_close = np.flatnonzero((imb_margin < 0) & (imb_margin >= -SIGMA * imb_se - tol))
    if psi_margin > SIGMA:
        psi_status = "below_bound"
    elif psi_margin < -SIGMA:
        psi_status = "above_bound"
    else:
        psi_status = "undetermined"

    steps = {
        "measured_lipschitz": lip,
        "A_nu": A,
        "min_moment_gap": float(gaps.min()),
        "moment_ceiling": ceil_cf,
        "moment_ceiling_exact_areas": ceil_exact,
        "closeness_term": term_cl,
        "terminal_rhs": terminal_rhs,
        "terminal_holds": bool(terminal_ok),
        "finite_terminal_rhs": finite_rhs,
        "instance_chain_min_slack": float(chain_slack.min()),
        "instance_chain_ok": chain_ok,
        "eps_min": e_min,
        "A_floor": floor,
        "floor_holds": bool(A >= floor - tol),
        "slack_absorbed_by": "moment_gap" if float(gaps.min()) >= term_cl else "closeness",
    }
    estimates = {
        "psi_mean_square": McEstimate(psi_sq, psi_se, mc_samples, seed).to_dict(),
        "psi_mean_square_bound": psi_bound,
        "psi_margin_sigma": psi_margin,
        "psi_surrogate": psi_status,
        "imbalance_moment_failures": [int(i) for i in imb_fail[:20]],
        "imbalance_moment_undetermined": [int(i) for i in imb_close[:20]],
    }
    flags = {"hypothesis_6L_le_n_quarter": bool(hyp), "n": n, "L": float(L), "eps": float(eps)}
    if not chain_ok or imb_fail.size:
        status = "violation"
    elif psi_status != "below_bound" or imb_close.size or not terminal_ok:
        status = "inconclusive"
    else:
        status = "pass"
    return CertificateReport(status, steps, estimates, flags)


def symmetric_net_sphere(n, eps, seed=0, **kw):
    """Antipodally closed ``eps``-separated set on ``S^{n-1}`` (pairs ``x, -x`` are adjacent rows)."""
    from .metric import build_eps_net

    net = build_eps_net(n, 2.0, eps, seed=seed, **kw)
    rows = []
    for x in net.points:
        if all(np.linalg.norm(x - r) >= eps and np.linalg.norm(-x - r) >= eps for r in rows):
            rows.append(x)
    pts = []
    for x in rows:
        pts.extend([x, -x])
    return PointCloud(np.array(pts), p=2.0)


def metric_of(points) -> FiniteMetricSpace:
    return FiniteMetricSpace(pairwise_distances(np.asarray(points, float), 2.0))
