from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from lipext.metric import FiniteMetricSpace, PointCloud, pairwise_distances
from lipext.transport import (SignedMeasure, TransportError, dirac_difference, jordan_decompose,
                              moment, moment_bound_slack, w1_norm_dual, w1_norm_exact,
                              w1_norm_primal, write_plan_csv)

LINE = FiniteMetricSpace(pairwise_distances(np.array([[0.0], [1.0], [3.0]]), 2.0))


def _brute_force_w1(dist, w):
    """Integer-mass oracle: match unit atoms of mu+ to unit atoms of mu- over all bijections."""
    pos = [i for i, x in enumerate(w) for _ in range(max(x, 0))]
    neg = [i for i, x in enumerate(w) for _ in range(max(-x, 0))]
    return min(sum(dist[a, b] for a, b in zip(pos, perm)) for perm in permutations(neg))


def test_two_point():
    m = FiniteMetricSpace([[0, 3], [3, 0]])
    mu = dirac_difference(m, 0, 1)
    v, plan = w1_norm_primal(mu)
    assert v == 3.0
    assert plan.flow[0, 1] == 1.0
    d, pot = w1_norm_dual(mu)
    assert d == pytest.approx(3.0)
    assert pot.values[0] - pot.values[1] == pytest.approx(3.0)


def test_zero_measure():
    mu = SignedMeasure(LINE, np.zeros(3))
    assert w1_norm_primal(mu)[0] == 0.0
    assert w1_norm_dual(mu)[0] == 0.0


def test_collinear_instance(backend):
    mu = SignedMeasure(LINE, [1.0, -2.0, 1.0])
    assert w1_norm_primal(mu, backend=backend)[0] == pytest.approx(3.0)
    assert w1_norm_dual(mu, backend=backend)[0] == pytest.approx(3.0)
    assert w1_norm_exact(LINE, [1, -2, 1]) == 3


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        X = rng.standard_normal((4, 2))
        dist = pairwise_distances(X, 2.0)
        w = rng.integers(-2, 3, 4)
        w[-1] -= w.sum()
        if np.abs(w).sum() > 8:
            continue
        mu = SignedMeasure(FiniteMetricSpace(dist), w.astype(float))
        assert w1_norm_primal(mu)[0] == pytest.approx(_brute_force_w1(dist, w), abs=1e-9)


def test_plan_marginals():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((8, 3))
    w = rng.standard_normal(8)
    w -= w.mean()
    mu = SignedMeasure(FiniteMetricSpace(pairwise_distances(X, 1.0)), w)
    v, plan = w1_norm_primal(mu)
    pos, neg = jordan_decompose(mu)
    out, inn = plan.marginals()
    np.testing.assert_allclose(out, pos, atol=1e-10)
    np.testing.assert_allclose(inn, neg * pos.sum() / neg.sum(), atol=1e-10)
    dual, pot = w1_norm_dual(mu)
    assert pot.max_violation(mu.support.dist) <= 1e-9
    assert dual == pytest.approx(v, abs=1e-9)


def test_nonzero_mass_rejected():
    with pytest.raises(ValueError):
        SignedMeasure(LINE, [1.0, 0.0, 0.0])


def test_measure_roundtrip():
    mu = SignedMeasure(LINE, [1.0, -2.0, 1.0])
    back = SignedMeasure.from_dict(mu.to_dict())
    assert np.array_equal(back.weights, mu.weights)
    pc = PointCloud(np.array([[0.0], [1.0], [3.0]]))
    assert w1_norm_primal(SignedMeasure.from_dict({"support": pc.to_dict(), "weights": [1, -2, 1]}))[0] == 3.0


def test_exact_limits():
    with pytest.raises(ValueError):
        w1_norm_exact(np.zeros((13, 13)), [0] * 13)
    with pytest.raises(ValueError):
        w1_norm_exact(LINE, [1, 0, 0])
    assert isinstance(w1_norm_exact(LINE, [Fraction(1, 3), Fraction(-1, 3), 0]), Fraction)


def test_moment_examples():
    pc = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    m = FiniteMetricSpace(pc.distances())
    np.testing.assert_allclose(moment(SignedMeasure(m, [-1, 1, 0]), pc), [1, 0])
    np.testing.assert_allclose(moment(SignedMeasure(m, [-2, 1, 1]), pc), [1, 1])


def test_moment_slack_examples():
    pc = PointCloud(np.array([[0.0], [1.0], [3.0]]))
    m = FiniteMetricSpace(pc.distances())
    assert moment_bound_slack(SignedMeasure(m, [1, -1, 0]), pc) == pytest.approx(0.0, abs=1e-12)
    assert moment_bound_slack(SignedMeasure(m, [1, -2, 1]), pc) == pytest.approx(2.0)


def test_moment_slack_rejects_foreign_metric():
    pc = PointCloud(np.array([[0.0], [1.0], [3.0]]))
    m = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(ValueError):
        moment_bound_slack(SignedMeasure(m, [1, -1, 0]), pc)


def test_iteration_limit_reports():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((30, 2))
    w = rng.standard_normal(30)
    w -= w.mean()
    mu = SignedMeasure(FiniteMetricSpace(pairwise_distances(X, 2.0)), w)
    with pytest.raises(TransportError, match="residual"):
        w1_norm_primal(mu, max_iter=1)


def test_plan_csv(tmp_path):
    mu = SignedMeasure(LINE, [1.0, -2.0, 1.0])
    _, plan = w1_norm_primal(mu)
    path = tmp_path / "plan.csv"
    write_plan_csv(plan, LINE, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,flow,cost" and len(lines) == 3
