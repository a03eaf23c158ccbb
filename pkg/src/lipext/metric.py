"""Point clouds in l_p^n, epsilon-nets of unit spheres, hypercube vertex sets and
finite metric spaces."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

ABS_TOL = 1e-9
MAX_HYPERCUBE_DIM = 20


def parse_p(p) -> float:
    """Normalise a norm exponent; accepts numbers and the strings ``"inf"``/``"infinity"``."""
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        p = float(p)
    p = float(p)
    if not (p >= 1.0):
        raise ValueError(f"norm exponent must satisfy p >= 1 or p = inf, got {p}")
    return p


def p_to_json(p: float):
    return "inf" if math.isinf(p) else p


def lp_norm(x, p, axis=-1):
    p = parse_p(p)
    a = np.abs(np.asarray(x, dtype=float))
    if p == 1.0:
        return a.sum(axis=axis)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    if math.isinf(p):
        return a.max(axis=axis) if a.shape[axis] else np.zeros(np.delete(a.shape, axis))
    return (a ** p).sum(axis=axis) ** (1.0 / p)


def lp_distance(x, y, p) -> float:
    """l_p distance between two vectors of equal length."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    return float(lp_norm(x - y, p))


def pairwise_distances(X, p, Y=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    return lp_norm(X[:, None, :] - Y[None, :, :], p)


@dataclass(frozen=True)
class PointCloud:
    """Finite set of points in R^dim carrying the l_p norm used to measure them."""

    points: np.ndarray
    p: float = 2.0
    labels: tuple | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array (k, dim)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "p", parse_p(self.p))
        object.__setattr__(self, "dim", int(pts.shape[1]))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(pts):
                raise ValueError("one label per point is required")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.points.shape[0]

    def norms(self):
        return lp_norm(self.points, self.p)

    def distances(self):
        return pairwise_distances(self.points, self.p)

    def to_dict(self):
        out = {"dim": self.dim, "p": p_to_json(self.p), "points": self.points.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, d):
        raw = d["points"]
        dim = int(d["dim"]) if "dim" in d else (len(raw[0]) if len(raw) else 0)
        pts = np.asarray(raw, dtype=float).reshape(-1, dim)
        return cls(pts, p=d.get("p", 2.0), labels=d.get("labels"))


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Symmetric distance matrix with zero diagonal; the triangle inequality is checked."""

    dist: np.ndarray

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        scale = max(1.0, float(np.abs(d).max())) if d.size else 1.0
        tol = ABS_TOL * scale
        if np.any(np.abs(np.diag(d)) > tol):
            raise ValueError("distance matrix must have zero diagonal")
        if np.any(np.abs(d - d.T) > tol):
            raise ValueError("distance matrix must be symmetric")
        if np.any(d < -tol):
            raise ValueError("distances must be nonnegative")
        m = d.shape[0]
        # d[i,k] <= d[i,j] + d[j,k], one intermediate j at a time
        for j in range(m):
            if np.any(d > d[:, j:j + 1] + d[j:j + 1, :] + tol):
                i, k = np.argwhere(d > d[:, j:j + 1] + d[j:j + 1, :] + tol)[0]
                raise ValueError(f"triangle inequality fails for ({i}, {j}, {k})")
        np.fill_diagonal(d, 0.0)
        d = 0.5 * (d + d.T)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def size(self):
        return self.dist.shape[0]

    def __len__(self):
        return self.size

    def restrict(self, idx):
        idx = np.asarray(idx, dtype=int)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)])

    def to_dict(self):
        return {"size": self.size, "dist": self.dist.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["dist"], dtype=float))


def extract_metric(cloud: PointCloud) -> FiniteMetricSpace:
    if len(cloud) == 0:
        raise ValueError("cloud is empty")
    return FiniteMetricSpace(cloud.distances())


def sample_sphere(rng, k, dim, p=2.0):
    """``k`` Gaussian vectors normalised in the l_p norm.

    Uniform on the sphere only for ``p = 2``; for other ``p`` the law is the
    cone measure pushed through normalisation, which is enough for coverage.
    """
    g = rng.standard_normal((k, dim))
    nrm = lp_norm(g, p)
    bad = nrm == 0.0
    while np.any(bad):  # probability zero, kept for completeness
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        nrm = lp_norm(g, p)
        bad = nrm == 0.0
    return g / nrm[:, None]


class NetBudgetError(RuntimeError):
    """Candidate budget exhausted before greedy selection stabilised.

    ``partial`` holds the separated set built so far.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def _anchor_front(anchors, dim, p, antipodal):
    if anchors is None:
        return np.zeros((0, dim)), []
    a = np.asarray(anchors, dtype=float).reshape(-1, dim)
    a = a / lp_norm(a, p)[:, None]
    rows, labels = [], []
    for i, x in enumerate(a):
        rows.append(x)
        labels.append(f"anchor{i}")
        if antipodal:
            rows.append(-x)
            labels.append(f"-anchor{i}")
    return np.array(rows).reshape(-1, dim), labels


def candidate_stream(dim, p, seed, count, *, anchors=None, antipodal=False):
    """The first ``count`` random candidates (after any anchors) seen by :func:`build_eps_net`."""
    p = parse_p(p)
    front, _ = _anchor_front(anchors, dim, p, antipodal)
    rng = np.random.default_rng(seed)
    return np.vstack([front, sample_sphere(rng, count, dim, p)])


def build_eps_net(dim, p, eps, seed=0, max_candidates=200_000, *, anchors=None,
                  antipodal=False, patience=None, batch=4096, kernels=None,
                  return_consumed=False):
    """Greedy maximal ``eps``-separated subset of a seeded candidate stream on S(l_p^dim).

    Parameters
    ----------
    anchors : array-like, optional
        Points placed at the front of the stream (normalised onto the sphere),
        so the net has a point within ``eps`` of each of them.
    antipodal : bool
        Also place ``-anchor`` right after each anchor.
    patience : int, optional
        Stop once this many consecutive candidates were rejected. Defaults to
        ``max(2000, 100 * len(net))`` evaluated as the net grows.

    Returns
    -------
    PointCloud, or ``(PointCloud, consumed)`` with ``return_consumed``
        ``consumed`` counts the random candidates drawn, so
        ``candidate_stream(..., consumed)`` reproduces the whole stream.

    Raises
    ------
    NetBudgetError
        If ``max_candidates`` are consumed before the stream stabilises.
    """
    p = parse_p(p)
    if not 0.0 < eps < 2.0:
        raise ValueError("eps must lie in (0, 2)")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    kern = kernels or _kernels
    rng = np.random.default_rng(seed)
    front, front_labels = _anchor_front(anchors, dim, p, antipodal)

    selected = np.zeros((0, dim))
    labels: list[str] = []
    consumed = 0
    last_accept = 0
    stream = front
    stream_labels = front_labels
    while True:
        if len(stream) == 0:
            if consumed >= max_candidates:
                net = PointCloud(selected, p=p, labels=labels)
                raise NetBudgetError(
                    f"{max_candidates} candidates consumed before the net stabilised "
                    f"({len(selected)} points)", net)
            take = min(batch, max_candidates - consumed)
            stream = sample_sphere(rng, take, dim, p)
            stream_labels = [f"c{consumed + i}" for i in range(take)]
        block = np.vstack([selected, stream])
        mask = kern.greedy_select(block, float(eps), float(p), len(selected))
        new = mask[len(selected):]
        hits = np.flatnonzero(new)
        if hits.size:
            last_accept = consumed + int(hits[-1]) + 1
            selected = np.vstack([selected, stream[hits]])
            labels.extend(stream_labels[i] for i in hits)
        consumed += len(stream)
        stream = np.zeros((0, dim))
        pat = patience if patience is not None else max(2000, 100 * len(selected))
        if consumed - last_accept >= pat and consumed >= len(front):
            net = PointCloud(selected, p=p, labels=labels)
            return (net, consumed - len(front)) if return_consumed else net


@dataclass(frozen=True)
class NetReport:
    density_radius: float
    separation_radius: float
    dense_ok: bool
    separated_ok: bool
    min_separation: float
    max_probe_distance: float
    probes: int
    seed: int
    witness_violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "density_radius": self.density_radius,
            "separation_radius": self.separation_radius,
            "dense_ok": self.dense_ok,
            "separated_ok": self.separated_ok,
            "min_separation": self.min_separation,
            "max_probe_distance": self.max_probe_distance,
            "probes": self.probes,
            "seed": self.seed,
            "witness_violations": self.witness_violations,
        }


def _probe_shard(args):
    child, count, pts, p, eps = args
    if isinstance(child, np.ndarray):
        probes = child
        count = len(probes)
    else:
        probes = sample_sphere(np.random.default_rng(child), count, pts.shape[1], p)
    best = np.full(count, np.inf)
    for start in range(0, len(pts), 256):
        d = pairwise_distances(probes, p, pts[start:start + 256])
        best = np.minimum(best, d.min(axis=1))
    bad = np.flatnonzero(best > eps)
    return float(best.max()) if count else 0.0, [(probes[i], float(best[i])) for i in bad[:20]]


def validate_net(net: PointCloud, eps, delta, probes=100_000, seed=0, *, shards=8,
                 workers=1, max_witnesses=20, probe_points=None) -> NetReport:
    """Exact separation check plus a seeded probabilistic density check.

    Probes are split into ``shards`` with seeds spawned from ``seed``; results do
    not depend on ``workers``. Passing ``probe_points`` (e.g. the candidate
    stream from :func:`candidate_stream`) replaces the random probes.
    """
    if len(net) == 0:
        raise ValueError("net is empty")
    if probes < 0:
        raise ValueError("probes must be >= 0")
    pts = net.points
    violations = []
    if len(net) > 1:
        d = net.distances()
        iu = np.triu_indices(len(net), 1)
        pair_d = d[iu]
        min_sep = float(pair_d.min())
        for k in np.flatnonzero(pair_d < delta)[:max_witnesses]:
            violations.append({"kind": "separation", "pair": [int(iu[0][k]), int(iu[1][k])],
                               "distance": float(pair_d[k])})
    else:
        min_sep = math.inf
    separated_ok = min_sep >= delta

    max_probe = 0.0
    dense_ok = True
    if probe_points is not None:
        given = np.asarray(probe_points, dtype=float).reshape(-1, net.dim)
        probes = len(given)
        jobs = [(chunk, 0, pts, net.p, eps) for chunk in np.array_split(given, shards) if len(chunk)]
    elif probes:
        children = np.random.SeedSequence(seed).spawn(shards)
        counts = [probes // shards + (1 if i < probes % shards else 0) for i in range(shards)]
        jobs = [(children[i], counts[i], pts, net.p, eps) for i in range(shards)]
    else:
        jobs = []
    if jobs:
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                results = list(ex.map(_probe_shard, jobs))
        else:
            results = [_probe_shard(j) for j in jobs]
        for worst, bad in results:
            max_probe = max(max_probe, worst)
            for x, dist in bad:
                dense_ok = False
                if len(violations) < max_witnesses + 20:
                    violations.append({"kind": "density", "probe": x.tolist(), "distance": dist})
    return NetReport(
        density_radius=float(eps),
        separation_radius=float(delta),
        dense_ok=dense_ok,
        separated_ok=bool(separated_ok),
        min_separation=float(min_sep),
        max_probe_distance=float(max_probe),
        probes=int(probes),
        seed=int(seed),
        witness_violations=violations,
    )


def vertex_signs(n) -> np.ndarray:
    """All of {-1, 1}^n; row ``k`` has ``-1`` in coordinate ``j`` iff bit ``j`` of ``k`` is set.

    So ``-x`` is row ``2**n - 1 - k`` and flipping coordinate ``j`` is ``k ^ (1 << j)``.
    """
    k = np.arange(2 ** n)[:, None]
    bits = (k >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def hypercube_points(n, p, max_dim=MAX_HYPERCUBE_DIM) -> PointCloud:
    """The ``2**n`` points ``n**(-1/p) * {-1, 1}^n`` (unit l_p norm)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_dim:
        raise ValueError(f"n = {n} exceeds the enumeration cap of {max_dim}")
    p = parse_p(p)
    scale = 1.0 if math.isinf(p) else n ** (-1.0 / p)
    signs = vertex_signs(n)
    labels = ["".join("+" if s > 0 else "-" for s in row) for row in signs]
    return PointCloud(scale * signs, p=p, labels=labels)
