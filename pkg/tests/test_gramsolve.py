import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_continuous_lyapunov

from netred.errors import IllConditioned, Infeasible, NotHurwitz, NotMinimal
from netred.graph import NetworkTopology, factorize
from netred.gramsolve import (
    barrier_polish,
    edge_gramians,
    generalized_edge_gramians,
    lmi_data,
    lmi_residual,
    solve_diagonal_lmi,
    solve_lyapunov,
    verify_gramian_bounds,
)
from netred.reduction import rank_edges
from netred.sysmodel import assemble_network, edge_system, make_subsystem

from conftest import path, random_pd, random_subsystem, random_tree

seeds = st.integers(0, 2**32 - 1)


def scalar_pair():
    sub = make_subsystem([[0.0]], [[1.0]], [[1.0]], [[1.0]])
    top = path(2, g=[[1.0], [0.0]], h=[[1.0, 0.0]])
    return sub, top


def test_lyapunov_scalar():
    assert solve_lyapunov([[-1.0]], [[1.0]])[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_lyapunov_decoupled():
    x = solve_lyapunov(np.diag([-1.0, -2.0]), np.eye(2))
    np.testing.assert_allclose(x, np.diag([0.5, 0.25]), atol=1e-15)


def test_lyapunov_errors():
    with pytest.raises(NotHurwitz):
        solve_lyapunov([[0.0, 1.0], [-1.0, 0.0]], np.eye(2))
    with pytest.raises(IllConditioned):
        solve_lyapunov(np.diag([-1.0, -1e-14]), np.eye(2))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 8), seed=seeds)
def test_lyapunov_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a -= (np.linalg.eigvals(a).real.max() + rng.uniform(0.1, 2.0)) * np.eye(n)
    f = rng.standard_normal((n, 2))
    w = f @ f.T
    x = solve_lyapunov(a, w)
    ref = solve_continuous_lyapunov(a, -w)
    np.testing.assert_allclose(x, ref, rtol=1e-8, atol=1e-10 * np.abs(ref).max())
    np.testing.assert_array_equal(x, x.T)
    assert np.linalg.eigvalsh(x).min() >= -1e-10 * np.trace(x)
    assert np.abs(a @ x + x @ a.T + w).max() <= 1e-8 * np.abs(w).max()


def test_edge_gramian_scalar():
    sub, top = scalar_pair()
    net = assemble_network(sub, top)
    fac = factorize(top)
    gram = edge_gramians(edge_system(net, fac, "edge"), edge_system(net, fac, "dual"))
    assert gram.p_edge[0, 0] == pytest.approx(1 / 6, abs=1e-15)


def test_edge_gramian_zero_input():
    sub, top = scalar_pair()
    top = top.with_io(g=np.zeros((2, 1)))
    net = assemble_network(sub, top)
    fac = factorize(top)
    gram = edge_gramians(edge_system(net, fac, "edge"), edge_system(net, fac, "dual"))
    np.testing.assert_array_equal(gram.p_edge, 0.0)


def test_edge_gramian_corridor(corridor_file):
    net = corridor_file.network()
    fac = factorize(corridor_file.topology)
    es, ds = edge_system(net, fac, "edge"), edge_system(net, fac, "dual")
    gram = edge_gramians(es, ds)
    assert np.linalg.eigvalsh(gram.p_edge).min() >= -1e-10 * np.abs(gram.p_edge).max()
    assert gram.residual_p <= 1e-8 * np.abs(es.b @ es.b.T).max()
    assert gram.residual_q <= 1e-8 * np.abs(ds.c.T @ ds.c).max()


def test_lmi_residual_definition(rng):
    a = rng.standard_normal((4, 4))
    d = rng.uniform(0, 1, 4)
    s = np.eye(4)
    np.testing.assert_allclose(lmi_residual(a, d, s), a @ np.diag(d) + np.diag(d) @ a.T - s, atol=1e-15)


def test_generalized_scalar():
    _, top = scalar_pair()
    gen = generalized_edge_gramians(factorize(top), top.g, top.h)
    # 2 * L_e * pi >= (E^T G)^2  ->  4 pi >= 1
    assert gen.pi_c[0] == pytest.approx(0.25, abs=1e-12)
    assert gen.feas_c >= -1e-12


def test_generalized_zero_input():
    _, top = scalar_pair()
    top = top.with_io(g=np.zeros((2, 1)))
    gen = generalized_edge_gramians(factorize(top), top.g, top.h)
    np.testing.assert_array_equal(gen.pi_c, 0.0)


def test_generalized_corridor_ranking(corridor_file):
    top = corridor_file.topology
    gen = generalized_edge_gramians(factorize(top), top.g, top.h)
    order = rank_edges(gen).order
    assert order[-1] == 4
    assert set(order[-3:-1]) == {0, 3}
    assert gen.certified


def test_infeasible_lmi():
    # 0 * d - 1 >= 0 has no solution
    with pytest.raises(Infeasible):
        solve_diagonal_lmi(np.zeros((1, 1)), np.ones((1, 1)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 12), seed=seeds)
def test_generalized_certified(n, seed):
    rng = np.random.default_rng(seed)
    top = random_tree(rng, n, inputs=2)
    fac = factorize(top)
    gen = generalized_edge_gramians(fac, top.g, top.h)
    (ac, sc), (ao, so) = lmi_data(fac, top.g, top.h)
    assert np.all(gen.pi_c >= 0) and np.all(gen.pi_o >= 0)
    assert np.linalg.eigvalsh(lmi_residual(ac, gen.pi_c, sc)).min() >= -1e-8 * max(np.abs(sc).max(), 1)
    assert np.linalg.eigvalsh(lmi_residual(ao, gen.pi_o, so)).min() >= -1e-8 * max(np.abs(so).max(), 1)
    assert gen.lower_c <= gen.trace_c * (1 + 1e-12) and gen.lower_o <= gen.trace_o * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), seed=seeds, scale=st.floats(0.1, 10.0))
def test_input_scaling(n, seed, scale):
    rng = np.random.default_rng(seed)
    top = random_tree(rng, n)
    fac = factorize(top)
    scaled = generalized_edge_gramians(fac, scale * top.g, top.h)
    (ac, sc), _ = lmi_data(fac, top.g, top.h)
    margin = np.linalg.eigvalsh(lmi_residual(ac, scaled.pi_c / scale**2, sc)).min()
    assert margin >= -1e-8 * max(np.abs(sc).max(), 1.0)


def test_matches_conic_oracle():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(7)
    for _ in range(15):
        n = int(rng.integers(2, 9))
        top = random_tree(rng, n, inputs=2)
        fac = factorize(top)
        for a, s in lmi_data(fac, top.g, top.h):
            ours = solve_diagonal_lmi(a, s)
            d = cp.Variable(n - 1)
            m = a @ cp.diag(d) + cp.diag(d) @ a.T - s
            prob = cp.Problem(cp.Minimize(cp.sum(d)), [(m + m.T) / 2 >> 0, d >= 0])
            prob.solve(solver=cp.CLARABEL)
            # ours is exactly feasible, so it can only undercut the oracle by the oracle's own slack
            assert ours.trace == pytest.approx(prob.value, rel=1e-4)


def test_barrier_polish_reaches_optimum():
    _, top = scalar_pair()
    (a, s), _ = lmi_data(factorize(top), top.g, top.h)
    d = barrier_polish(a, s, np.array([1.0]), 1e-10)
    assert d[0] == pytest.approx(0.25, abs=1e-8)
    assert barrier_polish(a, s, np.array([0.1]), 1e-10) is None


def test_bounds_scalar():
    sub, top = scalar_pair()
    net = assemble_network(sub, top)
    fac = factorize(top)
    gram = edge_gramians(edge_system(net, fac, "edge"), edge_system(net, fac, "dual"))
    gen = generalized_edge_gramians(fac, top.g, top.h)
    rep = verify_gramian_bounds(gram, gen, sub)
    assert rep.min_eig_c == pytest.approx(1 / 12, abs=1e-12)
    assert rep.passed


def test_bounds_zero_io():
    sub, top = scalar_pair()
    top = top.with_io(g=np.zeros((2, 1)), h=np.zeros((1, 2)))
    net = assemble_network(sub, top)
    fac = factorize(top)
    gram = edge_gramians(edge_system(net, fac, "edge"), edge_system(net, fac, "dual"))
    rep = verify_gramian_bounds(gram, generalized_edge_gramians(fac, top.g, top.h), sub)
    assert rep.min_eig_c == 0.0 and rep.min_eig_o == 0.0
    assert rep.passed


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 10), seed=seeds)
def test_bounds_random(n, seed):
    rng = np.random.default_rng(seed)
    top = random_tree(rng, n)
    sub = random_subsystem(rng)
    try:
        sub = make_subsystem(sub.j_mat, sub.r_mat, random_pd(rng, sub.n, 100.0), sub.b_mat)
    except NotMinimal:
        pass
    net = assemble_network(sub, top)
    fac = factorize(top)
    gram = edge_gramians(edge_system(net, fac, "edge"), edge_system(net, fac, "dual"))
    rep = verify_gramian_bounds(gram, generalized_edge_gramians(fac, top.g, top.h), sub)
    assert rep.passed, rep
