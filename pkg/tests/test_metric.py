import math

import numpy as np
import pytest

from lipext.metric import (FiniteMetricSpace, NetBudgetError, PointCloud, build_eps_net,
                           candidate_stream, hypercube_points, lp_distance, lp_norm,
                           pairwise_distances, parse_p, sample_sphere, validate_net, vertex_signs)


def test_parse_p():
    assert parse_p("inf") == math.inf
    assert parse_p(1.5) == 1.5
    with pytest.raises(ValueError):
        parse_p(0.5)


@pytest.mark.parametrize("p, expected", [(1, 7.0), (2, 5.0), (np.inf, 4.0)])
def test_lp_distance(p, expected):
    assert lp_distance([0, 0], [3, 4], p) == pytest.approx(expected)


def test_lp_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        lp_distance([0, 0], [1, 2, 3], 2)


def test_pairwise_matches_loop():
    X = np.random.default_rng(0).standard_normal((6, 3))
    D = pairwise_distances(X, 1.5)
    for i in range(6):
        for j in range(6):
            assert D[i, j] == pytest.approx(lp_distance(X[i], X[j], 1.5))


def test_point_cloud_roundtrip_and_readonly():
    pc = PointCloud(np.eye(3), p=1.0)
    back = PointCloud.from_dict(pc.to_dict())
    assert np.array_equal(back.points, pc.points) and back.p == 1.0
    with pytest.raises(ValueError):
        pc.points[0, 0] = 2.0


def test_finite_metric_validation():
    with pytest.raises(ValueError):
        FiniteMetricSpace([[0, 1, 5], [1, 0, 1], [5, 1, 0]])  # triangle fails
    with pytest.raises(ValueError):
        FiniteMetricSpace([[0, 1], [2, 0]])  # asymmetric
    with pytest.raises(ValueError):
        FiniteMetricSpace([[1, 1], [1, 0]])  # diagonal
    m = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert m.restrict([0, 2]).dist.tolist() == [[0, 2], [2, 0]]


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, math.inf])
def test_sample_sphere_unit_norm(p):
    X = sample_sphere(np.random.default_rng(0), 500, 4, p)
    np.testing.assert_allclose(lp_norm(X, p), 1.0, atol=1e-12)


def test_zero_sphere_net():
    net = build_eps_net(1, 2.0, 0.5, seed=3)
    assert sorted(net.points.ravel().tolist()) == [-1.0, 1.0]


@pytest.mark.parametrize("dim, p, eps", [(2, 2, 1.5), (2, 1, 0.5), (3, np.inf, 0.7)])
def test_net_is_separated_and_stream_dense(dim, p, eps):
    net, used = build_eps_net(dim, p, eps, seed=7, return_consumed=True)
    rep = validate_net(net, eps, eps, probe_points=candidate_stream(dim, p, 7, used))
    assert rep.separated_ok and rep.dense_ok


def test_net_is_deterministic():
    a = build_eps_net(3, 1.5, 0.6, seed=4)
    b = build_eps_net(3, 1.5, 0.6, seed=4)
    assert np.array_equal(a.points, b.points)


def test_net_anchors_and_antipodes():
    anchors = hypercube_points(3, 1.0).points
    net = build_eps_net(3, 1.0, 0.6, seed=0, anchors=anchors)
    d = pairwise_distances(anchors, 1.0, net.points)
    assert d.min(axis=1).max() == 0.0


def test_net_budget_error_keeps_partial():
    with pytest.raises(NetBudgetError) as info:
        build_eps_net(4, 2.0, 0.2, seed=0, max_candidates=500, patience=10_000)
    assert len(info.value.partial) > 0


def test_validate_net_reports_witnesses():
    net = PointCloud(np.array([[1.0, 0.0], [0.9, math.sqrt(1 - 0.81)]]), p=2.0)
    rep = validate_net(net, 0.5, 0.5, probes=2000, seed=1)
    assert not rep.separated_ok and not rep.dense_ok
    kinds = {w["kind"] for w in rep.witness_violations}
    assert kinds == {"separation", "density"}


def test_vertex_signs_conventions():
    s = vertex_signs(3)
    k = 5
    assert np.array_equal(s[7 - k], -s[k])
    assert np.sum(s[k] != s[k ^ 2]) == 1
    pts = hypercube_points(3, 1.0).points
    np.testing.assert_allclose(lp_norm(pts, 1.0), 1.0)
