"""Edge ranking, clustering by Petrov-Galerkin projection, and multi-step reduction.

Internally vertices and edges are 0-based. An edge index always refers to
the canonical edge order of the network it belongs to (see
:mod:`netred.graph`); ``ReductionStep.edge_map`` translates surviving edges
into the canonical order of the reduced network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .errors import DegenerateNetwork, EdgeNotFound, Infeasible, InheritanceViolation, SingularBlock
from .graph import (
    EdgeFactorization,
    NetworkTopology,
    build_laplacian,
    complete_factorization,
    factorize,
    readonly,
    underlying_undirected_edges,
)
from .gramsolve import (
    BOUND_RTOL,
    GeneralizedEdgeGramians,
    feasibility_scale,
    generalized_edge_gramians,
    lmi_data,
    lmi_residual,
)
from .sysmodel import NetworkedSystem, assemble_network

SCHUR_RTOL = 1e-10
WEIGHT_CLEAN_RTOL = 1e-14
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class RankEntry:
    edge: int
    pi_c: float
    pi_o: float
    product: float


@dataclass(frozen=True)
class EdgeRanking:
    """Edges sorted by decreasing ``pi_c * pi_o``; equal products by ascending edge."""

    entries: tuple[RankEntry, ...]

    @property
    def order(self) -> list[int]:
        return [e.edge for e in self.entries]

    def _pick(self, value: float) -> int:
        tol = TIE_RTOL * max(abs(value), 1e-300)
        return min(e.edge for e in self.entries if abs(e.product - value) <= tol)

    def least_important(self) -> int:
        """Clustering candidate: smallest product, lowest edge among near-ties."""
        if not self.entries:
            raise DegenerateNetwork("network has no edges to rank")
        return self._pick(self.entries[-1].product)

    def most_important(self) -> int:
        if not self.entries:
            raise DegenerateNetwork("network has no edges to rank")
        return self._pick(self.entries[0].product)


def rank_edges(generalized: GeneralizedEdgeGramians) -> EdgeRanking:
    prods = generalized.pi_c * generalized.pi_o
    entries = [
        RankEntry(k, float(generalized.pi_c[k]), float(generalized.pi_o[k]), float(prods[k]))
        for k in range(prods.size)
    ]
    entries.sort(key=lambda e: (-e.product, e.edge))
    return EdgeRanking(tuple(entries))


@dataclass(frozen=True)
class ReductionStep:
    """One clustering of the endpoints ``pair = (i, j)``, ``i < j``, of ``edge``.

    ``v_proj`` holds 0/1 cluster indicators and ``w_proj`` the weighted
    projection with ``W^T V = I``; vertex ``j`` is absorbed into ``i``.
    """

    edge: int
    pair: tuple[int, int]
    weights: tuple[float, float]
    v_proj: np.ndarray
    w_proj: np.ndarray
    vertex_map: tuple[int, ...]
    edge_map: tuple[int, ...]

    @property
    def kept_edges(self) -> list[int]:
        return [k for k in range(len(self.edge_map)) if k != self.edge]


def projections(n: int, i: int, j: int, w_ij: float, w_ji: float):
    """``V``, ``W`` and the vertex map for merging ``j`` into ``i`` (``i < j``)."""
    vertex_map = [k if k < j else k - 1 for k in range(n)]
    vertex_map[j] = i
    v = np.zeros((n, n - 1))
    w = np.zeros((n, n - 1))
    for k, p in enumerate(vertex_map):
        v[k, p] = 1.0
        w[k, p] = 1.0
    total = w_ij + w_ji
    w[i, i] = w_ji / total
    w[j, i] = w_ij / total
    return v, w, tuple(vertex_map)


def cluster_once(topology: NetworkTopology, factorization: EdgeFactorization, edge: int):
    """Merge the endpoints of ``edge``; returns ``(reduced topology, step)``.

    Raises
    ------
    DegenerateNetwork
        On a single-vertex network.
    EdgeNotFound
        If ``edge`` is not an edge index of ``factorization``.
    """
    n = topology.n_vertices
    if n < 2:
        raise DegenerateNetwork("cannot cluster a single-vertex network")
    if not 0 <= edge < factorization.n_edges:
        raise EdgeNotFound(f"edge {edge + 1} does not exist (network has {factorization.n_edges} edges)")
    i, j = sorted(factorization.edges[edge])
    w_ij = float(topology.weights[i, j])
    w_ji = float(topology.weights[j, i])
    v, w, vertex_map = projections(n, i, j, w_ij, w_ji)

    lap_hat = w.T @ build_laplacian(topology) @ v
    weights_hat = -lap_hat.copy()
    np.fill_diagonal(weights_hat, 0.0)
    weights_hat[np.abs(weights_hat) < WEIGHT_CLEAN_RTOL * np.abs(lap_hat).max()] = 0.0
    reduced = NetworkTopology(np.maximum(weights_hat, 0.0), w.T @ topology.g, topology.h @ v)

    new_edges = {e: k for k, e in enumerate(underlying_undirected_edges(reduced))}
    edge_map = []
    for k, (a, b) in enumerate(factorization.edges):
        if k == edge:
            edge_map.append(-1)
            continue
        pa, pb = vertex_map[a], vertex_map[b]
        key = (min(pa, pb), max(pa, pb))
        if key not in new_edges:
            raise EdgeNotFound(f"surviving edge {k + 1} has no image in the reduced graph")
        edge_map.append(new_edges[key])
    step = ReductionStep(
        edge=edge,
        pair=(i, j),
        weights=(w_ij, w_ji),
        v_proj=readonly(v),
        w_proj=readonly(w),
        vertex_map=vertex_map,
        edge_map=tuple(edge_map),
    )
    return reduced, step


def reduced_factorization(step: ReductionStep, factorization: EdgeFactorization) -> EdgeFactorization:
    """Reduced ``(E_hat, F_hat)`` built blockwise from the original factors.

    Columns keep the original (non-canonical) order and orientation of the
    surviving edges. The merged vertex row of ``E_hat`` is ``E_i0 + E_j0``
    and that of ``F_hat`` the convex combination
    ``w_ji/(w_ij+w_ji) F_i0 + w_ij/(w_ij+w_ji) F_j0``.
    """
    i, j = step.pair
    w_ij, w_ji = step.weights
    keep = step.kept_edges
    e, f = factorization.e_mat[:, keep], factorization.f_mat[:, keep]
    n_hat = factorization.n_vertices - 1
    e_hat = np.zeros((n_hat, len(keep)))
    f_hat = np.zeros((n_hat, len(keep)))
    for old, new in enumerate(step.vertex_map):
        if old in (i, j):
            continue
        e_hat[new] = e[old]
        f_hat[new] = f[old]
    m = step.vertex_map[i]
    total = w_ij + w_ji
    e_hat[m] = e[i] + e[j]
    f_hat[m] = (w_ji / total) * f[i] + (w_ij / total) * f[j]

    edges = []
    for col in range(len(keep)):
        plus = int(np.flatnonzero(e_hat[:, col] > 0)[0])
        minus = int(np.flatnonzero(e_hat[:, col] < 0)[0])
        edges.append((plus, minus))
    return complete_factorization(f_hat @ e_hat.T, e_hat, f_hat, edges)


@dataclass(frozen=True)
class SchurReport:
    residual_le: float
    residual_ge: float
    residual_hf: float
    scale_le: float
    scale_ge: float
    scale_hf: float

    @property
    def passed(self) -> bool:
        return self.passed_at(1.0)

    def passed_at(self, tol_scale: float) -> bool:
        tol = SCHUR_RTOL * tol_scale
        return (
            self.residual_le <= tol * self.scale_le
            and self.residual_ge <= tol * self.scale_ge
            and self.residual_hf <= tol * self.scale_hf
        )


def _max_abs(m) -> float:
    return float(np.abs(m).max()) if np.size(m) else 0.0


def schur_check(
    factorization: EdgeFactorization, step: ReductionStep, g, h, reduced: EdgeFactorization | None = None
) -> SchurReport:
    """Compare reduced edge quantities with Schur complements of the original ones.

    The clustered edge forms the scalar ``(2, 2)`` block; the remaining
    edges keep their original order.
    """
    if reduced is None:
        reduced = reduced_factorization(step, factorization)
    le = factorization.edge_laplacian
    ge = factorization.e_mat.T @ np.asarray(g)
    hf = np.asarray(h) @ factorization.f_mat
    l = step.edge
    keep = step.kept_edges
    l22 = le[l, l]
    if l22 == 0:
        raise SingularBlock(f"edge Laplacian block of edge {l + 1} is zero")
    l12 = le[np.ix_(keep, [l])]
    l21 = le[np.ix_([l], keep)]
    schur_le = le[np.ix_(keep, keep)] - l12 @ l21 / l22
    schur_ge = ge[keep] - l12 @ ge[[l]] / l22
    schur_hf = hf[:, keep] - hf[:, [l]] @ l21 / l22

    g_hat = step.w_proj.T @ g
    h_hat = np.asarray(h) @ step.v_proj
    le_hat = reduced.edge_laplacian
    ge_hat = reduced.e_mat.T @ g_hat
    hf_hat = h_hat @ reduced.f_mat

    def scale(x):
        m = _max_abs(x)
        return m if m > 0 else 1.0

    return SchurReport(
        residual_le=_max_abs(le_hat - schur_le),
        residual_ge=_max_abs(ge_hat - schur_ge),
        residual_hf=_max_abs(hf_hat - schur_hf),
        scale_le=scale(le),
        scale_ge=scale(ge),
        scale_hf=scale(hf),
    )


def inherit_gramians(
    generalized: GeneralizedEdgeGramians,
    step: ReductionStep,
    reduced_fact: EdgeFactorization,
    g_hat,
    h_hat,
    tol_scale: float = 1.0,
) -> GeneralizedEdgeGramians:
    """Drop the clustered edge's entries and re-certify against the reduced LMIs.

    ``reduced_fact`` is the canonical factorization of the reduced network;
    the surviving entries are permuted into its edge order.

    Raises
    ------
    InheritanceViolation
        If a reduced LMI residual has minimum eigenvalue below
        ``-1e-6 * tol_scale * scale``.
    """
    k = reduced_fact.n_edges
    pi_c = np.zeros(k)
    pi_o = np.zeros(k)
    for old in step.kept_edges:
        new = step.edge_map[old]
        pi_c[new] = generalized.pi_c[old]
        pi_o[new] = generalized.pi_o[old]
    (ac, sc), (ao, so) = lmi_data(reduced_fact, g_hat, h_hat)

    def margin(a, d, s):
        if d.size == 0:
            return 0.0
        r = lmi_residual(a, d, s)
        return float(np.linalg.eigvalsh((r + r.T) / 2)[0])

    out = GeneralizedEdgeGramians(
        pi_c=readonly(pi_c),
        pi_o=readonly(pi_o),
        feas_c=margin(ac, pi_c, sc),
        feas_o=margin(ao, pi_o, so),
        trace_c=float(pi_c.sum()),
        trace_o=float(pi_o.sum()),
        eps_c=BOUND_RTOL * tol_scale * feasibility_scale(sc),
        eps_o=BOUND_RTOL * tol_scale * feasibility_scale(so),
        status_c="inherited",
        status_o="inherited",
    )
    if not out.certified:
        raise InheritanceViolation(
            f"inherited Gramians violate reduced LMIs (margins {out.feas_c:.3e}, {out.feas_o:.3e})"
        )
    return out


@dataclass(frozen=True)
class ReduceOptions:
    recompute_each_step: bool = False
    strategy: str = "least"  # "least": cluster least important edge; "most": most important
    check_sync: bool = True
    tol_scale: float = 1.0  # multiplies the inheritance tolerance


@dataclass(frozen=True)
class StepLog:
    step: ReductionStep
    merged: tuple[tuple[int, ...], tuple[int, ...]]
    ranking: EdgeRanking
    margin_c: float
    margin_o: float
    schur: SchurReport
    sync_abscissa: float | None
    sync_ok: bool | None


@dataclass(frozen=True)
class ClusterMap:
    """Partition of the original vertices; block ``p`` is reduced vertex ``p``."""

    blocks: tuple[tuple[int, ...], ...]
    steps: tuple[StepLog, ...] = field(default=())

    @property
    def n_original(self) -> int:
        return sum(len(b) for b in self.blocks)


def reduce_to(network: NetworkedSystem, target: int, options: ReduceOptions | None = None, generalized=None):
    """Cluster repeatedly until ``target`` vertices remain.

    Returns ``(reduced network, ClusterMap)``. Generalized Gramians are
    computed once and inherited unless ``options.recompute_each_step``.

    Raises
    ------
    Infeasible
        Carrying the partial :class:`ClusterMap` as ``exc.partial``.
    """
    options = options or ReduceOptions()
    if options.strategy not in ("least", "most"):
        raise ValueError(f"unknown strategy {options.strategy!r}")
    n = network.n_vertices
    if not 1 <= target <= n:
        raise ValueError(f"target order must satisfy 1 <= target <= {n}, got {target}")
    blocks = [(k,) for k in range(n)]
    logs: list[StepLog] = []
    if target == n:
        return network, ClusterMap(tuple(blocks), ())

    sub = network.subsystem
    top = network.topology
    fact = factorize(top)
    try:
        gen = generalized if generalized is not None else generalized_edge_gramians(fact, top.g, top.h)
        while top.n_vertices > target:
            ranking = rank_edges(gen)
            edge = ranking.least_important() if options.strategy == "least" else ranking.most_important()
            reduced_top, step = cluster_once(top, fact, edge)
            schur = schur_check(fact, step, top.g, top.h)
            new_fact = factorize(reduced_top)
            inherited = inherit_gramians(gen, step, new_fact, reduced_top.g, reduced_top.h, options.tol_scale)
            if options.recompute_each_step:
                gen_next = generalized_edge_gramians(new_fact, reduced_top.g, reduced_top.h)
            else:
                gen_next = inherited
            abscissa = ok = None
            if options.check_sync:
                rep = analysis.sync_check(sub, new_fact, simulate=False, certificate=False)
                abscissa, ok = rep.max_real_part, rep.spectral_ok
            i, j = step.pair
            merged = (blocks[i], blocks[j])
            blocks[i] = tuple(sorted(blocks[i] + blocks[j]))
            del blocks[j]
            logs.append(StepLog(step, merged, ranking, inherited.feas_c, inherited.feas_o, schur, abscissa, ok))
            top, fact, gen = reduced_top, new_fact, gen_next
    except Infeasible as exc:
        exc.partial = ClusterMap(tuple(blocks), tuple(logs))
        raise
    return assemble_network(sub, top), ClusterMap(tuple(blocks), tuple(logs))
