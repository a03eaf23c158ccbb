"""Property-based checks of the structural invariants."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lipext.metric import FiniteMetricSpace, lp_norm, pairwise_distances, vertex_signs
from lipext.retraction import ExtensionInstance, optimal_uniform_error
from lipext.sphere import SphericalAtomicMeasure, imbalance, sphere_area
from lipext.transfer import LinearOperatorSpec, normalization_gap, transfer_g_construction
from lipext.transport import SignedMeasure, dirac_difference, moment, w1_norm_dual, w1_norm_primal
from lipext.metric import PointCloud, build_eps_net
from lipext.witnesses import WitnessMap, crinkled_distance, enflo_check, helix_embed

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf])


@st.composite
def clouds(draw, min_size=2, max_size=8, dim=None):
    m = draw(st.integers(min_size, max_size))
    d = dim or draw(st.integers(1, 3))
    X = draw(arrays(float, (m, d), elements=finite, unique=True))
    return X


@st.composite
def signed_measures(draw, max_size=8):
    X = draw(clouds(max_size=max_size))
    p = draw(exponents)
    w = draw(arrays(float, (len(X),), elements=st.floats(-5, 5, allow_nan=False)))
    w = w - w.mean()
    return X, p, w


def _measure(X, p, w):
    return SignedMeasure(FiniteMetricSpace(pairwise_distances(X, p)), w)


@given(signed_measures())
def test_primal_equals_dual(data):
    X, p, w = data
    mu = _measure(X, p, w)
    v, _ = w1_norm_primal(mu)
    d, pot = w1_norm_dual(mu)
    assert v >= 0
    assert abs(v - d) <= 1e-7 * max(1.0, v)
    assert pot.max_violation(mu.support.dist) <= 1e-9 * max(1.0, mu.support.dist.max())


@given(clouds(), exponents, st.data())
def test_dirac_difference_norm_is_distance(X, p, data):
    m = FiniteMetricSpace(pairwise_distances(X, p))
    a = data.draw(st.integers(0, len(X) - 1))
    b = data.draw(st.integers(0, len(X) - 1))
    v, _ = w1_norm_primal(dirac_difference(m, a, b))
    assert abs(v - m.dist[a, b]) <= 1e-9 * max(1.0, m.dist[a, b])


@given(signed_measures(), st.floats(-3, 3))
def test_norm_homogeneous_and_subadditive(data, c):
    X, p, w = data
    mu = _measure(X, p, w)
    nu = _measure(X, p, np.roll(w, 1))
    v = w1_norm_primal(mu)[0]
    assert abs(w1_norm_primal(c * mu)[0] - abs(c) * v) <= 1e-7 * max(1.0, abs(c) * v)
    assert w1_norm_primal(mu + nu)[0] <= v + w1_norm_primal(nu)[0] + 1e-7 * max(1.0, v)


@given(signed_measures())
def test_moment_bound(data):
    X, p, w = data
    mu = _measure(X, p, w)
    v = w1_norm_primal(mu)[0]
    assert float(lp_norm(moment(mu, PointCloud(X, p=p)), p)) <= v + 1e-9 * max(1.0, v)


@settings(max_examples=15)
@given(clouds(min_size=4, max_size=6, dim=2), st.floats(0.1, 1.2), st.data())
def test_nu_shift_invariance(X, L, data):
    k = 3
    inst = ExtensionInstance(FiniteMetricSpace(pairwise_distances(X, 2.0)), range(k), L)
    raw = data.draw(arrays(float, (k,), elements=st.floats(0.01, 1)))
    a = optimal_uniform_error(inst).A_star
    b = optimal_uniform_error(inst.with_nu(raw / raw.sum())).A_star
    assert abs(a - b) <= 1e-7 * max(1.0, a)


@settings(max_examples=15)
@given(clouds(min_size=3, max_size=6, dim=2), st.floats(0.1, 1.0))
def test_monotone_in_L(X, L):
    inst = ExtensionInstance(FiniteMetricSpace(pairwise_distances(X, 2.0)), range(2), L)
    assert optimal_uniform_error(inst.with_L(2 * L)).A_star <= optimal_uniform_error(inst).A_star + 1e-8


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(1, 4))
def test_crinkled_symmetric_and_snowflake(s, t, p):
    assert crinkled_distance(s, t, p) == crinkled_distance(t, s, p)
    assert crinkled_distance(s, t, p) == abs(s - t) ** (1 / p)


@given(arrays(float, st.integers(2, 10), elements=st.floats(-10, 10), unique=True),
       st.floats(0.05, 0.95))
def test_helix_reproduces_snowflake(s, theta):
    d = helix_embed(s, theta).distances()
    expected = np.abs(s[:, None] - s[None]) ** theta
    assert np.abs(d - expected).max() <= 1e-6 * max(1.0, expected.max())


@given(st.integers(1, 6), st.integers(1, 8), st.floats(1, 2), st.integers(0, 2 ** 32 - 1))
def test_enflo_random_maps(n, m, q, seed):
    V = np.random.default_rng(seed).standard_normal((2 ** n, m))
    assert enflo_check(V, q).ok


@given(st.floats(0.1, 1.0), st.floats(1.0, 2.0), st.sampled_from([1.0, 1.5, 2.0]), st.integers(0, 100))
def test_witness_is_one_lipschitz_on_separated_sets(eps, q, p, seed):
    net = build_eps_net(2, p, eps, seed=seed, max_candidates=50_000)
    q = max(q, p)
    w = WitnessMap("helix" if p != 1.0 else "crinkled", p, q, eps, net)
    assert w.lipschitz_violations(tol=1e-12) == []


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite), exponents)
def test_normalization_gap(u, v, p):
    if lp_norm(u, p) == 0 or lp_norm(v, p) == 0:
        return
    lhs, rhs = normalization_gap(u, v, p)
    assert lhs <= rhs + 1e-12


@given(st.integers(0, 10), st.floats(0.1, 10))
def test_sphere_area_homogeneous(k, rho):
    assert sphere_area(k, rho) == rho ** k * sphere_area(k)


@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_imbalance_odd(n, k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, n))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    mu = SphericalAtomicMeasure(a, rng.standard_normal(k))
    z = rng.standard_normal((20, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    assert np.array_equal(imbalance(mu, -z), -imbalance(mu, z))


@settings(max_examples=10)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 2.0, math.inf]))
def test_g_construction_is_one_lipschitz(seed, p):
    rng = np.random.default_rng(seed)
    op = LinearOperatorSpec.from_matrix(np.eye(2) + 0.3 * rng.standard_normal((2, 2)), p, 2.0)
    net = build_eps_net(2, p, 0.7, seed=seed % 1000)
    rep = transfer_g_construction(lambda x: np.sin(np.asarray(x)) * 0.5, net, op, 0.7, seed=seed % 1000,
                                  max_candidates=20_000)["report"]
    assert rep["g_lipschitz_ok"] and rep["rescaling_identity_ok"] and rep["three_term_ok"]


@given(st.integers(1, 8))
def test_vertex_sign_antipodes(n):
    s = vertex_signs(n)
    idx = np.arange(2 ** n)
    assert np.array_equal(s[2 ** n - 1 - idx], -s)
