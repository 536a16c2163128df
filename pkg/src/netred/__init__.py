"""Clustering-based model reduction for tree networks of identical passive subsystems."""

from .errors import (
    AssumptionViolation,
    DegenerateNetwork,
    EdgeNotFound,
    GridMismatch,
    Infeasible,
    InheritanceViolation,
    NetredError,
    NotHurwitz,
    NumericalError,
    ParseError,
    UnknownExample,
    ValidationError,
)
from .graph import EdgeFactorization, NetworkTopology, build_laplacian, check_assumption, factorize
from .gramsolve import (
    GeneralizedEdgeGramians,
    edge_gramians,
    generalized_edge_gramians,
    solve_lyapunov,
    verify_gramian_bounds,
)
from .sysmodel import NetworkedSystem, Subsystem, assemble_network, edge_system, make_subsystem, simulate
from .reduction import ClusterMap, EdgeRanking, ReduceOptions, cluster_once, rank_edges, reduce_to
from .analysis import compare_responses, frequency_response, sync_certificate, sync_check
from .netfile import NetworkFile, emit, parse_network

__version__ = "0.1.0"
