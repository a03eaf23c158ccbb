"""Both kernel backends against an independent LP solver and each other."""
import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from lipext import _kernels
from lipext.metric import lp_norm, sample_sphere


def _transport_oracle(supply, demand, cost):
    m, k = cost.shape
    A = np.zeros((m + k, m * k))
    for i in range(m):
        A[i, i * k:(i + 1) * k] = 1
    for j in range(k):
        A[m + j, j::k] = 1
    res = scipy_linprog(cost.ravel(), A_eq=A, b_eq=np.r_[supply, demand], method="highs")
    return res.fun


@pytest.mark.parametrize("shape", [(1, 1), (1, 4), (3, 2), (6, 6), (9, 5)])
def test_transport_matches_oracle(backend, shape):
    rng = np.random.default_rng(sum(shape))
    m, k = shape
    supply = rng.uniform(0.1, 1, m)
    demand = rng.uniform(0.1, 1, k)
    demand *= supply.sum() / demand.sum()
    cost = rng.uniform(0, 5, (m, k))
    flow, u, v, it, status = _kernels.get_backend(backend).transport_simplex(
        supply, demand, cost, 1e-12, 100_000)
    assert status == 0
    assert np.all(flow >= -1e-12)
    np.testing.assert_allclose(flow.sum(1), supply, atol=1e-10)
    np.testing.assert_allclose(flow.sum(0), demand, atol=1e-10)
    assert (flow * cost).sum() == pytest.approx(_transport_oracle(supply, demand, cost), abs=1e-9)
    # complementary slackness: reduced costs nonnegative at the optimum
    assert (cost - u[:, None] - v[None, :]).min() >= -1e-9


def test_transport_degenerate_ties(backend):
    # equal supplies and demands with a constant cost: heavy degeneracy
    supply = np.ones(5)
    demand = np.ones(5)
    cost = np.ones((5, 5))
    flow, *_, status = _kernels.get_backend(backend).transport_simplex(supply, demand, cost, 1e-12, 1000)
    assert status == 0
    assert (flow * cost).sum() == pytest.approx(5.0)


def test_backends_agree_on_transport():
    if "cython" not in _kernels.available_backends():
        pytest.skip("extension not built")
    rng = np.random.default_rng(3)
    for _ in range(20):
        m, k = rng.integers(1, 12, 2)
        s = rng.uniform(0.1, 1, m)
        d = rng.uniform(0.1, 1, k)
        d *= s.sum() / d.sum()
        c = rng.uniform(0, 3, (m, k))
        a = _kernels.get_backend("cython").transport_simplex(s, d, c, 1e-12, 100_000)
        b = _kernels.get_backend("python").transport_simplex(s, d, c, 1e-12, 100_000)
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)
        assert a[3] == b[3]


@pytest.mark.parametrize("p", [1.0, 2.0, np.inf])
def test_greedy_select_separated_and_maximal(backend, p):
    cand = sample_sphere(np.random.default_rng(1), 3000, 3, p)
    mask = np.asarray(_kernels.get_backend(backend).greedy_select(cand, 0.4, float(p), 0), dtype=bool)
    sel = cand[mask]
    d = lp_norm(sel[:, None] - sel[None], p)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 0.4
    # every rejected candidate is within eps of an earlier selected one
    rej = cand[~mask]
    assert lp_norm(rej[:, None] - sel[None], p).min(axis=1).max() < 0.4


def test_greedy_select_respects_fixed_prefix(backend):
    cand = np.array([[1.0, 0.0], [0.99, 0.141], [0.0, 1.0], [1.0, 0.01]])
    mask = np.asarray(_kernels.get_backend(backend).greedy_select(cand, 0.5, 2.0, 2), dtype=bool)
    assert mask.tolist() == [True, True, True, False]


def test_backends_agree_on_greedy():
    if "cython" not in _kernels.available_backends():
        pytest.skip("extension not built")
    cand = sample_sphere(np.random.default_rng(2), 5000, 4, 1.5)
    a = np.asarray(_kernels.get_backend("cython").greedy_select(cand, 0.5, 1.5, 0), dtype=bool)
    b = np.asarray(_kernels.get_backend("python").greedy_select(cand, 0.5, 1.5, 0), dtype=bool)
    assert np.array_equal(a, b)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")
