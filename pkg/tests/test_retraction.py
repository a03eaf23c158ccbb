from fractions import Fraction

import numpy as np
import pytest

from lipext.metric import FiniteMetricSpace, pairwise_distances
from lipext.retraction import (BudgetError, ExtensionInstance, PreconditionError,
                               RetractionFamily, check_family, construct_extension,
                               exact_retraction, geodesic_free_edges, implied_pairs, lq_norm,
                               optimal_uniform_error, optimal_uniform_error_convex,
                               verify_equivalence)
from lipext.transport import SignedMeasure, w1_norm_primal


def line_instance(xs, subset, L=1.0, nu=None):
    pts = np.asarray(xs, dtype=float)[:, None]
    return ExtensionInstance(FiniteMetricSpace(pairwise_distances(pts, 2.0)), subset, L, nu)


def random_instance(rng, N=8, k=4, L=0.5, dim=2):
    X = rng.standard_normal((N, dim))
    return ExtensionInstance(FiniteMetricSpace(pairwise_distances(X, 2.0)), range(k), L)


def two_point_oracle(inst, eps_scale=1.0):
    """Omega = {a, b}: W1(Omega) is a line, so A* = max(0, 1 - L) d(a, b) / (2 eps_scale)."""
    a, b = inst.subset
    return max(0.0, 1.0 - inst.L) * inst.ambient.dist[a, b] / (2.0 * eps_scale)


def test_two_point_exact_extension():
    inst = line_instance([0, 1], [0, 1], nu=[1.0, 0.0])
    assert optimal_uniform_error(inst).A_star == 0.0


def test_midpoint_instance_family():
    inst = line_instance([0, 0.5, 1], [0, 2], nu=[1.0, 0.0])
    res = optimal_uniform_error(inst)
    assert res.A_star == pytest.approx(0.0, abs=1e-12)
    # the stated family mu_mid = (delta_b - delta_a)/2 is feasible by direct evaluation
    fam = RetractionFamily(inst.omega, np.array([[0.0, 0.0], [-0.5, 0.5], [-1.0, 1.0]]))
    check_family(inst, fam, 0.0)


@pytest.mark.parametrize("backend", ["highs", "simplex", "exact"])
def test_quarter_lipschitz(backend):
    inst = line_instance([0, 0.5, 1], [0, 2], L=0.25, nu=[1.0, 0.0])
    res = optimal_uniform_error(inst, backend=backend)
    assert float(res.A_star) == pytest.approx(0.375, abs=1e-9)
    if backend == "exact":
        assert res.A_star == Fraction(3, 8)


def test_two_point_oracle_random_ambient():
    rng = np.random.default_rng(1)
    for _ in range(10):
        X = rng.standard_normal((6, 2))
        L = rng.uniform(0.1, 1.5)
        eps = rng.uniform(0.2, 2)
        inst = ExtensionInstance(FiniteMetricSpace(pairwise_distances(X, 2.0)), [0, 1], L)
        assert optimal_uniform_error(inst, eps).A_star == pytest.approx(two_point_oracle(inst, eps), abs=1e-8)


def test_exact_oracle_small_instances():
    rng = np.random.default_rng(2)
    for _ in range(5):
        inst = random_instance(rng, N=4, k=3, L=rng.uniform(0.2, 1.0))
        a = optimal_uniform_error(inst).A_star
        e = optimal_uniform_error(inst, backend="exact").A_star
        assert a == pytest.approx(float(e), abs=1e-9)


def test_zero_when_ambient_is_subset():
    inst = random_instance(np.random.default_rng(3), N=6, k=6, L=1.0)
    assert optimal_uniform_error(inst).A_star == pytest.approx(0.0, abs=1e-12)
    assert optimal_uniform_error_convex(inst).A_star == pytest.approx(0.0, abs=1e-12)


def test_convex_midpoint_and_domination():
    inst = line_instance([0, 0.5, 1], [0, 2])
    res = optimal_uniform_error_convex(inst)
    assert res.A_star == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(res.family.weights[1], [0.5, 0.5], atol=1e-9)
    rng = np.random.default_rng(4)
    for _ in range(5):
        inst = random_instance(rng, L=0.4)
        assert optimal_uniform_error_convex(inst).A_star >= optimal_uniform_error(inst).A_star - 1e-7


def test_monotone_in_L():
    inst = random_instance(np.random.default_rng(5))
    vals = [optimal_uniform_error(inst.with_L(L)).A_star for L in (0.2, 0.4, 0.8, 1.6)]
    assert all(a >= b - 1e-8 for a, b in zip(vals, vals[1:]))


def test_certified_family_meets_constraints():
    inst = random_instance(np.random.default_rng(6), N=9, k=5, L=0.5)
    res = optimal_uniform_error(inst, 0.7)
    check_family(inst, res.family, res.certified_A, 0.7)
    assert res.certified_A >= res.A_star - 1e-9
    assert res.certified_A <= res.A_star * (1 + 1e-6) + 1e-9


def test_budget_error():
    inst = random_instance(np.random.default_rng(7), N=12, k=6)
    with pytest.raises(BudgetError):
        optimal_uniform_error(inst, lp_budget=10)


def test_geodesic_pruning_is_exact():
    d = pairwise_distances(np.array([[0.0], [1.0], [2.0], [5.0]]), 2.0)
    edges = geodesic_free_edges(d)
    assert (0, 2) not in {tuple(e) for e in edges}
    assert len(implied_pairs(d)) > 0


def test_construct_extension_examples():
    inst = line_instance([0, 0.5, 1], [0, 2], nu=[1.0, 0.0])
    fam = RetractionFamily(inst.omega, np.array([[0.0, 0.0], [-0.5, 0.5], [-1.0, 1.0]]))
    F = construct_extension(fam, np.array([[0.0], [1.0]]), inst.nu, norm=lq_norm(2.0))
    np.testing.assert_allclose(F.ravel(), [0.0, 0.5, 1.0])
    const = construct_extension(fam, np.array([[2.0], [2.0]]), inst.nu, norm=lq_norm(2.0))
    np.testing.assert_allclose(const.ravel(), 2.0)
    ex = exact_retraction(line_instance([0, 1, 3], [0, 1, 2]))
    f = np.array([[0.3], [1.1], [2.0]])
    np.testing.assert_allclose(construct_extension(ex, f, np.full(3, 1 / 3), norm=lq_norm(2.0)), f)


def test_construct_extension_rejects_non_lipschitz():
    ex = exact_retraction(line_instance([0, 1], [0, 1]))
    with pytest.raises(ValueError, match="pair"):
        construct_extension(ex, np.array([[0.0], [5.0]]), np.full(2, 0.5), norm=lq_norm(2.0))


def test_verify_equivalence_and_corruption():
    inst = random_instance(np.random.default_rng(8), N=7, k=4, L=0.5)
    res = optimal_uniform_error(inst, 0.5)
    rep = verify_equivalence(inst, res.family, res.certified_A, 20, seed=1, eps_scale=0.5)
    assert rep.passed
    w = res.family.weights.copy()
    w[-1] += np.r_[1.0, -1.0, 0.0, 0.0] * 5
    bad = RetractionFamily(res.family.omega, w)
    with pytest.raises(PreconditionError):
        verify_equivalence(inst, bad, res.certified_A, 5, eps_scale=0.5)


def test_exact_retraction_passes():
    inst = line_instance([0, 1, 3], [0, 1, 2])
    rep = verify_equivalence(inst, exact_retraction(inst), 0.0, 10)
    assert rep.passed and rep.max_error_excess <= 1e-9


def test_instance_roundtrip():
    inst = line_instance([0, 1, 3], [0, 2], L=0.5, nu=[0.25, 0.75])
    back = ExtensionInstance.from_dict(inst.to_dict())
    assert back.subset == inst.subset and np.allclose(back.nu, inst.nu)
    with pytest.raises(ValueError):
        line_instance([0, 1], [0, 0])
    with pytest.raises(ValueError):
        line_instance([0, 1], [0, 1], nu=[0.5, 0.6])


def test_family_rows_have_zero_mass():
    inst = random_instance(np.random.default_rng(9))
    fam = optimal_uniform_error(inst).family
    for x in range(len(fam)):
        m = fam.measure(x)
        assert isinstance(m, SignedMeasure)
        assert abs(m.weights.sum()) < 1e-9
    v, _ = w1_norm_primal(fam.difference(0, 1))
    assert v <= inst.L * inst.ambient.dist[0, 1] * (1 + 1e-7) + 1e-9
