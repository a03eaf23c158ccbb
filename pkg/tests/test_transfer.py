import math

import numpy as np
import pytest

from lipext.metric import build_eps_net, lp_norm
from lipext.transfer import (LinearOperatorSpec, coordinate_contraction, guaranteed_g_constant,
                             homogeneous_extension, homogeneous_extension_check, normalization_gap,
                             normalization_gap_check, orthogonal_retraction, sphere_map_check,
                             transfer_g_construction)


def test_normalization_examples():
    lhs, rhs = normalization_gap([1, 0], [0, 1])
    assert lhs == pytest.approx(math.sqrt(2)) and rhs == pytest.approx(2 * math.sqrt(2))
    assert normalization_gap([2, 0], [1, 0]) == (0.0, 1.0)
    with pytest.raises(ValueError):
        normalization_gap([0, 0], [1, 0])


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, math.inf])
def test_normalization_bound_sampled(p):
    rep = normalization_gap_check(p, pairs=20_000, seed=1)
    assert rep["ok"] and rep["violations"] == 0


@pytest.mark.parametrize("p", [1.0, 2.0, math.inf])
def test_operator_bounds_exact(p):
    B = np.array([[2.0, 0.5], [0.1, 1.0]])
    op = LinearOperatorSpec.from_matrix(B, p, p)
    assert op.exact
    rep = sphere_map_check(op, pairs=5000, seed=1)
    assert rep["operator_bound_ok"]
    lo, hi = rep["operator_ratio_range"]
    assert lo >= 1 - 1e-12 and hi <= op.D * (1 + 1e-12)


def test_identity_operator():
    op = LinearOperatorSpec.from_matrix(np.eye(3))
    assert op.D == 1.0
    x = np.random.default_rng(0).standard_normal((5, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    np.testing.assert_allclose(op.phi(x), x)


def test_diagonal_operator_D():
    op = LinearOperatorSpec.from_matrix(np.diag([1.0, 2.0]))
    assert op.D == pytest.approx(2.0)


@pytest.mark.parametrize("seed, ps, pt", [(0, 2, 2), (1, 1, 1), (2, 1.5, 3), (3, math.inf, 1)])
def test_sphere_maps_random_operators(seed, ps, pt):
    rng = np.random.default_rng(seed)
    B = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    op = LinearOperatorSpec.from_matrix(B, ps, pt)
    rep = sphere_map_check(op, pairs=5000, seed=2)
    assert rep["phi_ok"] and rep["phi_inverse_ok"] and rep["roundtrip_ok"]
    assert rep["operator_bound_ok"]


def test_singular_operator_rejected():
    with pytest.raises(ValueError):
        LinearOperatorSpec.from_matrix([[1.0, 2.0], [2.0, 4.0]])


def test_homogeneous_extension_identity_and_zero():
    Phi = homogeneous_extension(lambda x: x, 2.0)
    x = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(Phi(x), x)
    op = LinearOperatorSpec.from_matrix(np.diag([1.0, 2.0]))
    P = homogeneous_extension(op.phi, 2.0)
    np.testing.assert_allclose(lp_norm(P(x), 2.0), lp_norm(x, 2.0))


def test_homogeneous_extension_bound():
    op = LinearOperatorSpec.from_matrix(np.diag([1.0, 2.0]))
    rep = homogeneous_extension_check(op.phi, op.D, 2.0, 2.0, 2, pairs=10_000, seed=3)
    assert rep["precondition_ok"] and rep["ok"]
    assert rep["measured_lipschitz"] <= 5 * op.D


def test_transfer_identity_case():
    net = build_eps_net(2, 2.0, 0.5, seed=1)
    op = LinearOperatorSpec.from_matrix(np.eye(2))
    out = transfer_g_construction(lambda x: np.asarray(x), net, op, 0.5)
    rep = out["report"]
    assert rep["g_lipschitz_ok"] and rep["three_term_ok"] and rep["rescaling_identity_ok"]
    # direct evaluation: on phi(N) = N, g(a) = (a - a0)/18 + a0
    a0 = net.points[0]
    np.testing.assert_allclose(out["g"][:len(net)], (net.points - a0) / 18 + a0, atol=1e-15)


def test_transfer_constant_f():
    net = build_eps_net(2, 2.0, 0.5, seed=1)
    op = LinearOperatorSpec.from_matrix(np.diag([1.0, 1.5]))
    out = transfer_g_construction(lambda x: np.tile([0.3, -1.0], (len(np.atleast_2d(x)), 1)), net, op, 0.5)
    np.testing.assert_allclose(out["g"], np.tile([0.3, -1.0], (len(out["g"]), 1)))


def test_transfer_subspace_retraction():
    rng = np.random.default_rng(0)
    U = np.linalg.qr(rng.standard_normal((3, 2)))[0]
    op = LinearOperatorSpec.from_matrix(U @ np.array([[1.0, 0.4], [0.0, 1.3]]))
    net = build_eps_net(2, 2.0, 0.5, seed=1)
    out = transfer_g_construction(coordinate_contraction(rng, 2), net, op, 0.5,
                                  psi=orthogonal_retraction(U), ambient_dim=3)
    rep = out["report"]
    assert rep["psi_contract_ok"] and rep["phi_net_separated"]
    assert rep["g_lipschitz_ok"] and rep["three_term_ok"] and rep["rescaling_identity_ok"]
    assert rep["measured_best_constant"] <= rep["guaranteed_constant"] <= 1.0


def test_transfer_l1_source():
    rng = np.random.default_rng(5)
    op = LinearOperatorSpec.from_matrix(np.eye(2) + 0.2 * rng.standard_normal((2, 2)), 1.0, 2.0)
    net = build_eps_net(2, 1.0, 0.6, seed=2)
    rep = transfer_g_construction(coordinate_contraction(rng, 2), net, op, 0.6)["report"]
    assert rep["g_lipschitz_ok"] and rep["three_term_ok"]


def test_bad_psi_contract_reported():
    net = build_eps_net(2, 2.0, 0.5, seed=1)
    op = LinearOperatorSpec.from_matrix(np.eye(2))
    rep = transfer_g_construction(lambda x: np.asarray(x), net, op, 0.5,
                                  psi=lambda y: 0.5 * np.asarray(y))["report"]
    assert not rep["psi_contract_ok"]


def test_guaranteed_constant():
    assert guaranteed_g_constant(1, 1) == pytest.approx(1.0)
    assert guaranteed_g_constant(3, 2) < 1.0
