"""Passive subsystems, networked assembly and edge realizations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NonFinite, NotMinimal, NotPD, NotPSD, NotSkew, SingularEdgeLaplacian, ValidationError
from .graph import EdgeFactorization, NetworkTopology, build_laplacian, check_assumption, numerical_rank, readonly

SYM_RTOL = 1e-12
EDGE_COND_MAX = 1e12


def _max_abs(m) -> float:
    return float(np.abs(m).max()) if np.size(m) else 0.0


def _square(name: str, m) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def _check_symmetric(name: str, m: np.ndarray) -> None:
    if _max_abs(m - m.T) > SYM_RTOL * max(_max_abs(m), 1e-300):
        raise ValidationError(f"{name} not symmetric")


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


@dataclass(frozen=True)
class Subsystem:
    """Port-Hamiltonian block ``x' = (J - R) Q x + B v``, ``z = B^T Q x``.

    Build through :func:`make_subsystem`, which validates the structure.
    """

    j_mat: np.ndarray
    r_mat: np.ndarray
    q_mat: np.ndarray
    b_mat: np.ndarray
    a_mat: np.ndarray
    c_mat: np.ndarray

    @property
    def n(self) -> int:
        return self.q_mat.shape[0]

    @property
    def m(self) -> int:
        return self.b_mat.shape[1]

    @property
    def bc(self) -> np.ndarray:
        return self.b_mat @ self.c_mat


def make_subsystem(j_mat, r_mat, q_mat, b_mat) -> Subsystem:
    """Validate ``(J, R, Q, B)`` and derive ``A = (J - R) Q`` and ``C = B^T Q``.

    Raises
    ------
    NotSkew, NotPSD, NotPD, NotMinimal
        Naming the violated structural property.
    ValidationError
        For asymmetric ``R``/``Q`` or non-finite entries.
    """
    j = _square("J", j_mat)
    r = _square("R", r_mat)
    q = _square("Q", q_mat)
    n = q.shape[0]
    if j.shape != (n, n) or r.shape != (n, n):
        raise DimensionMismatch(f"J, R, Q must share shape {(n, n)}: got J {j.shape}, R {r.shape}")
    b = np.asarray(b_mat, dtype=float)
    if b.ndim < 2:
        b = b.reshape(n, -1)
    if b.shape[0] != n:
        raise DimensionMismatch(f"B must have {n} rows, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValidationError("B has non-finite entries")

    if _max_abs(j + j.T) > SYM_RTOL * _max_abs(j):
        raise NotSkew("J not skew-symmetric")
    _check_symmetric("R", r)
    _check_symmetric("Q", q)
    r = (r + r.T) / 2
    q = (q + q.T) / 2
    r_min = np.linalg.eigvalsh(r)[0]
    if r_min < -SYM_RTOL:
        raise NotPSD(f"R not positive semidefinite (min eigenvalue {r_min:.3e})")
    q_min = np.linalg.eigvalsh(q)[0]
    if q_min < SYM_RTOL * _max_abs(q) or q_min <= 0:
        raise NotPD(f"Q not positive definite (min eigenvalue {q_min:.3e})")

    a = (j - r) @ q
    c = b.T @ q
    if numerical_rank(controllability_matrix(a, b)) < n:
        raise NotMinimal("(A, B) not controllable")
    if numerical_rank(controllability_matrix(a.T, c.T)) < n:
        raise NotMinimal("(A, C) not observable")
    return Subsystem(*(readonly(x) for x in (j, r, q, b, a, c)))


@dataclass(frozen=True)
class NetworkedSystem:
    """``x' = (I (x) A - L (x) BC) x + (G (x) B) u``, ``y = (H (x) C) x``."""

    subsystem: Subsystem
    topology: NetworkTopology
    a_net: np.ndarray
    b_net: np.ndarray
    c_net: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.topology.n_vertices

    @property
    def state_dim(self) -> int:
        return self.a_net.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        return build_laplacian(self.topology)


def network_matrices(subsystem: Subsystem, lap: np.ndarray, g: np.ndarray, h: np.ndarray):
    """Kronecker-assembled ``(a, b, c)`` for any coupling matrix ``lap``."""
    k = lap.shape[0]
    a = np.kron(np.eye(k), subsystem.a_mat) - np.kron(lap, subsystem.bc)
    return a, np.kron(g, subsystem.b_mat), np.kron(h, subsystem.c_mat)


def assemble_network(subsystem: Subsystem, topology: NetworkTopology) -> NetworkedSystem:
    check_assumption(topology)
    a, b, c = network_matrices(subsystem, build_laplacian(topology), topology.g, topology.h)
    return NetworkedSystem(subsystem, topology, readonly(a), readonly(b), readonly(c))


@dataclass(frozen=True)
class EdgeSystem:
    """State-space realization of the dynamics in edge coordinates.

    ``flavor="edge"`` uses ``x_e = (E^T (x) I) x`` with input map ``E^T G``
    and output map ``H F (E^T F)^-1``; ``flavor="dual"`` uses
    ``x_f = ((E^T F)^-1 (x) I) x_e`` with ``(E^T F)^-1 E^T G`` and ``H F``.
    Both share ``a``.
    """

    flavor: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    g_graph: np.ndarray
    h_graph: np.ndarray


def edge_laplacian_inverse(factorization: EdgeFactorization) -> np.ndarray:
    le = factorization.edge_laplacian
    if le.size == 0:
        return np.zeros((0, 0))
    cond = np.linalg.cond(le)
    if not np.isfinite(cond) or cond > EDGE_COND_MAX:
        raise SingularEdgeLaplacian(f"edge Laplacian condition number {cond:.3e} exceeds {EDGE_COND_MAX:.0e}")
    return np.linalg.inv(le)


def edge_system(network: NetworkedSystem, factorization: EdgeFactorization, flavor: str = "edge") -> EdgeSystem:
    if flavor not in ("edge", "dual"):
        raise ValueError(f"flavor must be 'edge' or 'dual', got {flavor!r}")
    sub = network.subsystem
    e, f = factorization.e_mat, factorization.f_mat
    le = factorization.edge_laplacian
    le_inv = edge_laplacian_inverse(factorization)
    top = network.topology
    g_e = e.T @ top.g
    h_f = top.h @ f
    if flavor == "edge":
        g_graph, h_graph = g_e, h_f @ le_inv
    else:
        g_graph, h_graph = le_inv @ g_e, h_f
    a, b, c = network_matrices(sub, le, g_graph, h_graph)
    return EdgeSystem(flavor, *(readonly(x) for x in (a, b, c, g_graph, h_graph)))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # shape (len(t), n)


def default_step(a: np.ndarray, horizon: float) -> float:
    row_sum = float(np.abs(a).sum(axis=1).max()) if a.size else 0.0
    candidates = [horizon / 1000]
    if row_sum > 0:
        candidates.append(0.1 / row_sum)
    return min(candidates)


def simulate(
    a,
    x0,
    horizon: float,
    step: float | None = None,
    b=None,
    u: Callable[[float], np.ndarray] | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step RK4 integration of ``x' = a x + b u(t)``.

    Without an input the RK4 update is the constant linear map
    ``Phi = I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``, which is applied
    directly, jumping between recorded samples with ``Phi**record_every``.
    The default step is ``min(0.1 / max_row_sum(|a|), horizon/1000)``.
    Samples are kept every ``record_every`` steps plus the final one.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    x = np.asarray(x0, dtype=float).copy()
    if step is None:
        step = default_step(a, horizon)
    if not step > 0 or horizon < step:
        raise ValueError(f"need step > 0 and horizon >= step (step={step}, horizon={horizon})")
    n_steps = int(np.ceil(horizon / step - 1e-9))
    h = horizon / n_steps
    ts, xs = [0.0], [x.copy()]

    if u is None:
        ha = h * a
        phi = np.eye(a.shape[0])
        term = np.eye(a.shape[0])
        for k in range(1, 5):
            term = term @ ha / k
            phi = phi + term
        # jump between recorded samples with a precomputed power of phi
        jump = np.linalg.matrix_power(phi, record_every)
        k = 0
        while k < n_steps:
            stride = min(record_every, n_steps - k)
            x = (jump if stride == record_every else np.linalg.matrix_power(phi, stride)) @ x
            k += stride
            if not np.all(np.isfinite(x)):
                raise NonFinite(f"state left finite range at t={k * h:.6g}")
            ts.append(k * h)
            xs.append(x.copy())
        return Trajectory(np.array(ts), np.array(xs))

    b = np.atleast_2d(np.asarray(b, dtype=float))

    def f(t, x):
        return a @ x + b @ np.atleast_1d(u(t))

    for k in range(1, n_steps + 1):
        t = (k - 1) * h
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % record_every == 0 or k == n_steps:
            if not np.all(np.isfinite(x)):
                raise NonFinite(f"state left finite range at t={k * h:.6g}")
            ts.append(k * h)
            xs.append(x.copy())
    return Trajectory(np.array(ts), np.array(xs))
