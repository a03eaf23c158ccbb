from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from lipext import linprog


def _random_lp(rng, n=5, m=7):
    A = rng.uniform(-1, 1, (m, n))
    b = rng.uniform(0.5, 2, m)
    c = rng.uniform(-1, 1, n)
    # box keeps it bounded
    A = np.vstack([A, np.eye(n)])
    b = np.r_[b, np.full(n, 3.0)]
    return c, A, b


@pytest.mark.parametrize("seed", range(8))
def test_simplex_matches_highs(backend, seed):
    c, A, b = _random_lp(np.random.default_rng(seed))
    ours = linprog.solve(c, A, b, backend=backend)
    ref = scipy_linprog(c, A_ub=A, b_ub=b, method="highs")
    assert ours.status == "optimal"
    assert ours.fun == pytest.approx(ref.fun, abs=1e-9)
    assert np.all(A @ ours.x <= b + 1e-9)


def test_equalities_and_free_variables(backend):
    # min x0 + x1 with x0 - x1 = 1, x0 free, x1 >= 0 -> x1 = 0, x0 = 1
    res = linprog.solve([1.0, 1.0], A_eq=[[1.0, -1.0]], b_eq=[1.0],
                        free=[True, False], backend=backend)
    assert res.fun == pytest.approx(1.0)
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-12)


def test_exact_mode_returns_fractions():
    res = linprog.solve([Fraction(-1), Fraction(-1)], [[1, 2], [3, 1]], [4, 6], exact=True)
    # vertex (8/5, 6/5)
    assert res.fun == Fraction(-14, 5)
    assert list(res.x) == [Fraction(8, 5), Fraction(6, 5)]


def test_infeasible_and_unbounded_raise():
    with pytest.raises(linprog.LPError):
        linprog.solve([1.0], A_eq=[[1.0]], b_eq=[-1.0])
    with pytest.raises(linprog.LPError):
        linprog.solve([-1.0], A_ub=[[-1.0]], b_ub=[0.0])


def test_highs_wrapper_agrees():
    c, A, b = _random_lp(np.random.default_rng(11))
    assert linprog.solve_highs(c, A, b).fun == pytest.approx(linprog.solve(c, A, b).fun, abs=1e-9)
