import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netred.errors import AssumptionViolation, DimensionMismatch, ValidationError
from netred.graph import (
    NetworkTopology,
    build_laplacian,
    factorize,
    has_directed_rooted_spanning_tree,
    incidence_factors,
    is_tree,
    numerical_rank,
    spanning_tree_root,
    underlying_undirected_edges,
)

from conftest import path, random_tree

seeds = st.integers(0, 2**32 - 1)


def test_laplacian_symmetric_edge():
    top = NetworkTopology.from_edges(2, [(0, 1, 1.0, 1.0)])
    np.testing.assert_array_equal(build_laplacian(top), [[1, -1], [-1, 1]])


def test_laplacian_one_directional():
    top = NetworkTopology.from_edges(2, [(0, 1, 2.0, 0.0)])
    np.testing.assert_array_equal(build_laplacian(top), [[2, -2], [0, 0]])


def test_laplacian_corridor_diagonal(corridor_file):
    lap = build_laplacian(corridor_file.topology)
    np.testing.assert_allclose(np.diag(lap), [62.5, 125, 125, 125, 125, 62.5], rtol=0, atol=1e-12)
    assert np.count_nonzero(np.triu(lap, 2)) == 0


def test_laplacian_row_sums_exact_for_dyadic_weights():
    top = NetworkTopology.from_edges(4, [(0, 1, 0.5, 2.0), (1, 2, 4.0, 0.25), (1, 3, 1.0, 0.0)])
    np.testing.assert_array_equal(build_laplacian(top) @ np.ones(4), 0.0)


def test_undirected_edges():
    assert underlying_undirected_edges(NetworkTopology.from_edges(2, [(0, 1, 2.0, 0.0)])) == [(0, 1)]
    assert underlying_undirected_edges(NetworkTopology(np.zeros((2, 2)), np.zeros(2), np.zeros(2))) == []


def test_undirected_edges_corridor(corridor_file):
    assert underlying_undirected_edges(corridor_file.topology) == [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]


def test_is_tree_cases(corridor_file):
    assert is_tree(corridor_file.topology)
    tri = NetworkTopology.from_edges(3, [(0, 1, 1, 1), (1, 2, 1, 1), (0, 2, 1, 1)])
    assert not is_tree(tri)
    assert not is_tree(NetworkTopology(np.zeros((2, 2)), np.zeros(2), np.zeros(2)))


def test_spanning_tree_single_arc():
    # w_12 = 2 means arc 2 -> 1; vertex 2 (index 1) is the root
    top = NetworkTopology.from_edges(2, [(0, 1, 2.0, 0.0)])
    assert has_directed_rooted_spanning_tree(top)
    assert spanning_tree_root(top) == 1


def test_spanning_tree_outward_from_middle():
    # w_12 > 0, w_32 > 0: both arcs leave vertex 2
    top = NetworkTopology.from_edges(3, [(0, 1, 1.0, 0.0), (1, 2, 0.0, 1.0)])
    assert spanning_tree_root(top) == 1
    _, f = incidence_factors(top)
    assert numerical_rank(f) == 2
    assert has_directed_rooted_spanning_tree(top)


def test_spanning_tree_inward_to_middle():
    # arcs 1 -> 2 and 3 -> 2 only: nothing reaches both leaves
    top = NetworkTopology.from_edges(3, [(0, 1, 0.0, 1.0), (1, 2, 1.0, 0.0)])
    _, f = incidence_factors(top)
    assert numerical_rank(f) == 1
    assert not has_directed_rooted_spanning_tree(top)
    with pytest.raises(AssumptionViolation, match="spanning-tree"):
        factorize(top)


def test_factorize_symmetric_pair():
    fac = factorize(NetworkTopology.from_edges(2, [(0, 1, 1.0, 1.0)]))
    np.testing.assert_array_equal(fac.e_mat.ravel(), [1, -1])
    np.testing.assert_array_equal(fac.f_mat.ravel(), [1, -1])
    np.testing.assert_array_equal(fac.edge_laplacian, [[2]])
    np.testing.assert_allclose(fac.nu, [0.5, 0.5], atol=1e-15)


def test_factorize_absorbing_root():
    fac = factorize(NetworkTopology.from_edges(2, [(0, 1, 2.0, 0.0)]))
    np.testing.assert_array_equal(fac.f_mat.ravel(), [2, 0])
    np.testing.assert_array_equal(fac.edge_laplacian, [[2]])
    np.testing.assert_allclose(fac.nu, [0, 1], atol=1e-15)


def test_factorize_rejects_triangle():
    tri = NetworkTopology.from_edges(3, [(0, 1, 1, 1), (1, 2, 1, 1), (0, 2, 1, 1)])
    with pytest.raises(AssumptionViolation, match="tree assumption"):
        factorize(tri)


def test_single_vertex_is_degenerate_but_valid():
    fac = factorize(NetworkTopology(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1))))
    assert fac.n_edges == 0
    np.testing.assert_array_equal(fac.nu, [1.0])


@pytest.mark.parametrize(
    "weights, err",
    [
        ([[0, -1], [1, 0]], ValidationError),
        ([[1, 1], [1, 0]], ValidationError),
        ([[0, np.nan], [1, 0]], ValidationError),
        ([[0, 1, 0], [1, 0, 1]], DimensionMismatch),
    ],
)
def test_topology_validation(weights, err):
    with pytest.raises(err):
        NetworkTopology(np.array(weights, dtype=float), np.zeros(len(weights)), np.zeros(len(weights)))


def test_topology_is_immutable():
    top = path(3)
    with pytest.raises(ValueError):
        top.weights[0, 1] = 5.0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 20), seed=seeds)
def test_factorization_invariants(n, seed):
    rng = np.random.default_rng(seed)
    top = random_tree(rng, n)
    fac = factorize(top)
    lap = build_laplacian(top)
    scale = np.abs(lap).max()
    # the diagonal is a rounded sum, so row sums vanish to a few ulps
    assert np.all(np.abs(lap.sum(axis=1)) <= 4 * np.finfo(float).eps * np.diag(lap))
    np.testing.assert_allclose(fac.f_mat @ fac.e_mat.T, lap, rtol=0, atol=1e-13 * scale)
    np.testing.assert_array_equal(fac.e_mat.sum(axis=0), 0.0)
    assert np.all((fac.e_mat == 1).sum(axis=0) == 1) and np.all((fac.e_mat == -1).sum(axis=0) == 1)
    # nu is a nonnegative probability left null vector
    assert np.all(fac.nu >= 0)
    assert fac.nu.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(fac.nu @ lap, 0.0, atol=1e-9 * scale)
    # T L T^-1 = blkdiag(0, L_e)
    t = fac.t_mat
    blk = t @ lap @ np.linalg.inv(t)
    expected = np.zeros((n, n))
    expected[1:, 1:] = fac.edge_laplacian
    assert np.abs(blk - expected).max() <= 1e-8 * scale
    assert np.linalg.eigvals(fac.edge_laplacian).real.min() > 0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 20), seed=seeds)
def test_edge_laplacian_spectrum(n, seed):
    rng = np.random.default_rng(seed)
    fac = factorize(random_tree(rng, n))
    lam_l = np.linalg.eigvals(fac.laplacian)
    lam_l = np.delete(lam_l, np.argmin(np.abs(lam_l)))
    lam_e = np.linalg.eigvals(fac.edge_laplacian)
    # match as multisets by greedy nearest pairing
    remaining = list(lam_l)
    for z in lam_e:
        k = int(np.argmin([abs(z - r) for r in remaining]))
        assert abs(z - remaining[k]) <= 1e-8 * max(abs(z), 1.0)
        remaining.pop(k)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 10), seed=seeds, drop=st.floats(0, 1))
def test_search_and_rank_agree(n, seed, drop):
    rng = np.random.default_rng(seed)
    w = random_tree(rng, n, one_way=0.0).weights.copy()
    # zero out directions at random; the tree stays a tree as long as one direction survives
    for i, j in zip(*np.nonzero(np.triu(w + w.T))):
        r = rng.random()
        if r < drop / 2:
            w[i, j] = 0.0
        elif r < drop:
            w[j, i] = 0.0
    top = NetworkTopology(w, np.zeros(n), np.zeros(n))
    assert is_tree(top)
    _, f = incidence_factors(top)
    assert has_directed_rooted_spanning_tree(top) == (numerical_rank(f) == n - 1)
