"""Weighted directed interconnection graphs and their Laplacian factorization.

Vertices are 0-based here. ``weights[i, j]`` is the coupling strength
``w_ij`` with which vertex ``i`` is driven by the output of vertex ``j``, so
the directed graph has an arc ``j -> i`` whenever ``w_ij > 0``.

Edges of the underlying undirected graph are numbered in lexicographic order
of their ``(min, max)`` endpoint pairs and every incidence column is oriented
``e_min - e_max``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation, DimensionMismatch, NumericalError, ValidationError

RANK_RTOL = 1e-12
NULL_RTOL = 1e-8


def readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def numerical_rank(m: np.ndarray) -> int:
    """Rank with singular values above ``sigma_max * max(shape) * 1e-12``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > s[0] * max(m.shape) * RANK_RTOL))


@dataclass(frozen=True)
class NetworkTopology:
    """Coupling weights plus external input/output gains.

    Parameters
    ----------
    weights : (nbar, nbar) array
        ``weights[i, j] = w_ij >= 0``; zero diagonal.
    g : (nbar, mbar) array
        External input gains ``g_ij``.
    h : (pbar, nbar) array
        External output gains ``h_ij``.

    Assumption-level properties (tree, rooted spanning tree) are *not*
    enforced here; see :func:`check_assumption`.
    """

    weights: np.ndarray
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise DimensionMismatch(f"weights must be a non-empty square matrix, got shape {w.shape}")
        n = w.shape[0]
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValidationError("self-loops (nonzero w_ii) are not allowed")
        g = np.asarray(self.g, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if g.ndim == 1:
            g = g.reshape(n, -1)
        if h.ndim == 1:
            h = h.reshape(-1, n)
        if g.shape[0] != n:
            raise DimensionMismatch(f"G must have {n} rows, got shape {g.shape}")
        if h.ndim != 2 or h.shape[1] != n:
            raise DimensionMismatch(f"H must have {n} columns, got shape {h.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise ValidationError("G and H must be finite")
        object.__setattr__(self, "weights", readonly(w))
        object.__setattr__(self, "g", readonly(g))
        object.__setattr__(self, "h", readonly(h))

    @classmethod
    def from_edges(cls, n_vertices: int, edges, g=None, h=None) -> "NetworkTopology":
        """Build from ``(i, j, w_ij, w_ji)`` tuples with 0-based vertices.

        ``g`` and ``h`` default to zero input/output maps with one channel.
        """
        w = np.zeros((n_vertices, n_vertices))
        for i, j, wij, wji in edges:
            if i == j:
                raise ValidationError(f"self-loop at vertex {i}")
            w[i, j] = wij
            w[j, i] = wji
        if g is None:
            g = np.zeros((n_vertices, 1))
        if h is None:
            h = np.zeros((1, n_vertices))
        return cls(w, g, h)

    @property
    def n_vertices(self) -> int:
        return self.weights.shape[0]

    def with_io(self, g=None, h=None) -> "NetworkTopology":
        return NetworkTopology(self.weights, self.g if g is None else g, self.h if h is None else h)


def build_laplacian(topology: NetworkTopology) -> np.ndarray:
    w = topology.weights
    lap = -w.copy()
    np.fill_diagonal(lap, w.sum(axis=1))
    return lap


def underlying_undirected_edges(topology: NetworkTopology) -> list[tuple[int, int]]:
    w = topology.weights
    s = w + w.T
    n = topology.n_vertices
    return [(i, j) for i in range(n) for j in range(i + 1, n) if s[i, j] > 0]


def _connected(n: int, edges) -> bool:
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    todo = [0]
    while todo:
        v = todo.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                todo.append(u)
    return len(seen) == n


def is_tree(topology: NetworkTopology) -> bool:
    edges = underlying_undirected_edges(topology)
    n = topology.n_vertices
    return len(edges) == n - 1 and _connected(n, edges)


def spanning_tree_root(topology: NetworkTopology) -> int | None:
    """Lowest-numbered vertex from which every vertex is reachable along arcs.

    Arc ``j -> i`` exists iff ``w_ij > 0``. Returns ``None`` when the
    directed graph contains no directed rooted spanning tree.
    """
    w = topology.weights
    n = topology.n_vertices
    out = [np.flatnonzero(w[:, j] > 0) for j in range(n)]
    for root in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        todo = deque([root])
        while todo:
            j = todo.popleft()
            for i in out[j]:
                if not seen[i]:
                    seen[i] = True
                    todo.append(i)
        if seen.all():
            return root
    return None


def incidence_factors(topology: NetworkTopology, edges=None) -> tuple[np.ndarray, np.ndarray]:
    """Oriented incidence matrix ``E`` and weighted factor ``F`` with ``L = F E^T``.

    Column ``l`` of ``E`` is ``e_i - e_j`` for edge ``(i, j)`` and the
    matching column of ``F`` is ``w_ij e_i - w_ji e_j``.
    """
    if edges is None:
        edges = underlying_undirected_edges(topology)
    w = topology.weights
    n = topology.n_vertices
    e = np.zeros((n, len(edges)))
    f = np.zeros((n, len(edges)))
    for col, (i, j) in enumerate(edges):
        e[i, col], e[j, col] = 1.0, -1.0
        f[i, col], f[j, col] = w[i, j], -w[j, i]
    return e, f


def has_directed_rooted_spanning_tree(topology: NetworkTopology) -> bool:
    """Search-based test, cross-checked against ``rank F = nbar - 1`` on trees."""
    found = spanning_tree_root(topology) is not None
    if is_tree(topology):
        _, f = incidence_factors(topology)
        by_rank = numerical_rank(f) == topology.n_vertices - 1
        if by_rank != found:
            raise NumericalError(
                f"reachability search ({found}) and rank of F ({by_rank}) disagree; "
                "weights are numerically borderline"
            )
    return found


def check_assumption(topology: NetworkTopology) -> None:
    if not is_tree(topology):
        raise AssumptionViolation(
            "tree assumption violated: the underlying undirected graph is not a tree "
            f"({len(underlying_undirected_edges(topology))} edges on {topology.n_vertices} vertices"
            f"{'' if _connected(topology.n_vertices, underlying_undirected_edges(topology)) else ', disconnected'})"
        )
    if not has_directed_rooted_spanning_tree(topology):
        raise AssumptionViolation(
            "spanning-tree assumption violated: the directed graph contains no directed rooted spanning tree"
        )


@dataclass(frozen=True)
class EdgeFactorization:
    """``L = F E^T`` with edge Laplacian ``L_e = E^T F``.

    ``nu`` is the nonnegative left null vector of ``L`` normalized to sum 1,
    and ``t_mat = [nu^T; E^T]`` block-diagonalizes ``L``.
    """

    laplacian: np.ndarray
    e_mat: np.ndarray
    f_mat: np.ndarray
    edge_laplacian: np.ndarray
    nu: np.ndarray
    t_mat: np.ndarray
    edges: tuple = field(default=())

    @property
    def n_vertices(self) -> int:
        return self.laplacian.shape[0]

    @property
    def n_edges(self) -> int:
        return self.e_mat.shape[1]

    def edge_index(self, i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        for k, (a, b) in enumerate(self.edges):
            if (min(a, b), max(a, b)) == key:
                return k
        raise KeyError(key)


def left_null_vector(lap: np.ndarray) -> np.ndarray:
    """Left eigenvector of ``L`` for its eigenvalue of smallest magnitude, summing to 1."""
    n = lap.shape[0]
    if n == 1:
        return np.ones(1)
    lam, vecs = np.linalg.eig(lap.T)
    k = int(np.argmin(np.abs(lam)))
    scale = np.abs(lap).max()
    if abs(lam[k]) > NULL_RTOL * scale:
        raise NumericalError(f"L has no zero eigenvalue (smallest |lambda| = {abs(lam[k]):.3e})")
    nu = vecs[:, k]
    nu = np.real(nu / nu.sum())
    tol = 1e-10
    if np.any(nu < -tol):
        raise NumericalError(f"left null vector has negative entries: {nu}")
    nu[nu < 0] = 0.0
    return nu / nu.sum()


def complete_factorization(lap, e_mat, f_mat, edges=()) -> EdgeFactorization:
    """Attach ``L_e``, ``nu`` and ``T`` to a given ``(E, F)`` pair."""
    nu = left_null_vector(lap)
    le = e_mat.T @ f_mat
    t = np.vstack([nu[None, :], e_mat.T])
    return EdgeFactorization(
        laplacian=readonly(lap),
        e_mat=readonly(e_mat),
        f_mat=readonly(f_mat),
        edge_laplacian=readonly(le),
        nu=readonly(nu),
        t_mat=readonly(t),
        edges=tuple(edges),
    )


def factorize(topology: NetworkTopology) -> EdgeFactorization:
    """Incidence factorization with canonical edge order and orientation.

    Raises
    ------
    AssumptionViolation
        If the graph is not a tree or has no directed rooted spanning tree.
    """
    check_assumption(topology)
    edges = underlying_undirected_edges(topology)
    e, f = incidence_factors(topology, edges)
    return complete_factorization(build_laplacian(topology), e, f, edges)
