import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from netred.simplex import CoveringLP, solve_covering_lp


def test_textbook_instance():
    r = solve_covering_lp([1.0, 1.0], [[1.0, 2.0], [3.0, 1.0]], [2.0, 3.0])
    assert r.status == "optimal"
    np.testing.assert_allclose(r.x, [0.8, 0.6], atol=1e-12)
    assert r.value == pytest.approx(1.4, abs=1e-12)


def test_no_rows_gives_zero():
    r = CoveringLP([1.0, 2.0]).solve()
    np.testing.assert_array_equal(r.x, [0.0, 0.0])


def test_infeasible_zero_row():
    r = solve_covering_lp([1.0], [[0.0]], [1.0])
    assert r.status == "infeasible"


def test_infeasible_negative_only_row():
    # -x >= 1 with x >= 0
    r = solve_covering_lp([1.0, 1.0], [[-1.0, -2.0]], [1.0])
    assert r.status == "infeasible"


def test_rejects_negative_cost():
    with pytest.raises(ValueError):
        CoveringLP([-1.0])


def test_warm_start_matches_cold(rng):
    c = rng.uniform(0.5, 2.0, 4)
    rows = rng.uniform(-1, 2, (12, 4))
    rhs = rng.uniform(0, 1, 12)
    lp = CoveringLP(c)
    for a, b in zip(rows, rhs):
        lp.add_row(a, b)
        warm = lp.solve()
    cold = solve_covering_lp(c, rows, rhs)
    assert warm.status == cold.status
    if warm.status == "optimal":
        assert warm.value == pytest.approx(cold.value, rel=1e-10)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), m=st.integers(1, 15))
def test_matches_scipy(seed, n, m):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.0, 3.0, n)
    a = rng.uniform(-1.0, 2.0, (m, n))
    b = rng.uniform(-0.5, 1.0, m)
    ours = solve_covering_lp(c, a, b)
    ref = linprog(c, A_ub=-a, b_ub=-b, bounds=[(0, None)] * n, method="highs")
    if ref.status == 2:
        assert ours.status == "infeasible"
    elif ref.status == 0:
        assert ours.status == "optimal"
        assert ours.value == pytest.approx(ref.fun, rel=1e-8, abs=1e-9)
        assert np.all(a @ ours.x >= b - 1e-9)
        assert np.all(ours.x >= 0)


def test_docstring_example():
    import doctest

    import netred.simplex

    assert doctest.testmod(netred.simplex).failed == 0
