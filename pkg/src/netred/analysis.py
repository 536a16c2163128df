"""Synchronization checks, frequency responses and response comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, SingularAtFrequency
from .graph import EdgeFactorization, readonly
from .gramsolve import solve_lyapunov
from .sysmodel import Subsystem, default_step, network_matrices, simulate

SPEC_RTOL = 1e-9
FREQ_COND_MAX = 1e14
SECONDS_PER_HOUR = 3600.0


def edge_dynamics(subsystem: Subsystem, factorization: EdgeFactorization) -> np.ndarray:
    """``I (x) A - L_e (x) BC``."""
    k = factorization.n_edges
    return np.kron(np.eye(k), subsystem.a_mat) - np.kron(factorization.edge_laplacian, subsystem.bc)


def spectral_abscissa(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return -np.inf
    return float(np.linalg.eigvals(a).real.max())


def disagreement(x: np.ndarray, n_vertices: int) -> np.ndarray:
    """Max pairwise distance ``max_ij ||x_i - x_j||`` for each row of stacked states."""
    x = np.atleast_2d(x)
    blocks = x.reshape(x.shape[0], n_vertices, -1)
    diff = blocks[:, :, None, :] - blocks[:, None, :, :]
    return np.sqrt((diff**2).sum(axis=-1)).max(axis=(1, 2))


@dataclass(frozen=True)
class SyncCertificate:
    k_mat: np.ndarray
    alpha: float
    min_eig_k: float
    residual: float


@dataclass(frozen=True)
class SimulationDecay:
    horizon: float
    ratio: float  # disagreement at horizon / at start
    slope: float  # fitted log-disagreement slope over the second half
    t: np.ndarray
    disagreement: np.ndarray


@dataclass(frozen=True)
class SyncReport:
    spectral_ok: bool
    max_real_part: float
    eps: float
    certificate: SyncCertificate | None = None
    simulation: SimulationDecay | None = None

    @property
    def simulation_decay(self) -> float | None:
        return None if self.simulation is None else self.simulation.ratio


def lyapunov_certificate(le) -> SyncCertificate:
    """``K`` with ``L_e^T K + K L_e = I`` for a given edge Laplacian.

    Raises
    ------
    NotHurwitz
        If ``-L_e`` is not Hurwitz.
    """
    le = np.atleast_2d(np.asarray(le, dtype=float))
    k = solve_lyapunov(-le.T, np.eye(le.shape[0]))
    lhs = le.T @ k + k @ le
    return SyncCertificate(
        k_mat=readonly(k),
        alpha=float(np.linalg.eigvalsh((lhs + lhs.T) / 2)[0]) if lhs.size else 1.0,
        min_eig_k=float(np.linalg.eigvalsh(k)[0]) if k.size else np.inf,
        residual=float(np.abs(lhs - np.eye(le.shape[0])).max()) if lhs.size else 0.0,
    )


def sync_certificate(factorization: EdgeFactorization) -> SyncCertificate:
    return lyapunov_certificate(factorization.edge_laplacian)


def simulate_disagreement(
    subsystem: Subsystem,
    factorization: EdgeFactorization,
    horizon: float,
    seed: int = 42,
    samples: int = 2000,
) -> SimulationDecay:
    """Free response of the full network from a seeded standard normal state."""
    a, _, _ = network_matrices(
        subsystem, factorization.laplacian, np.zeros((factorization.n_vertices, 1)), np.zeros((1, factorization.n_vertices))
    )
    x0 = np.random.default_rng(seed).standard_normal(a.shape[0])
    step = default_step(a, horizon)
    n_steps = int(np.ceil(horizon / step))
    traj = simulate(a, x0, horizon, step=step, record_every=max(1, n_steps // samples))
    dis = disagreement(traj.x, factorization.n_vertices)
    half = traj.t >= traj.t[-1] / 2
    positive = half & (dis > 0)
    slope = float(np.polyfit(traj.t[positive], np.log(dis[positive]), 1)[0]) if positive.sum() >= 2 else -np.inf
    ratio = float(dis[-1] / dis[0]) if dis[0] > 0 else 0.0
    return SimulationDecay(horizon, ratio, slope, traj.t, dis)


def sync_check(
    subsystem: Subsystem,
    factorization: EdgeFactorization,
    simulate: bool = False,
    certificate: bool = True,
    seed: int = 42,
    horizon: float | None = None,
) -> SyncReport:
    """Spectral synchronization test on the edge dynamics.

    ``spectral_ok`` holds iff the spectral abscissa of ``I (x) A - L_e (x) BC``
    is below ``-1e-9 * max|entry|``. The optional simulation defaults to a
    horizon of ``20 / |abscissa|``.
    """
    a_edge = edge_dynamics(subsystem, factorization)
    eps = SPEC_RTOL * (float(np.abs(a_edge).max()) if a_edge.size else 0.0)
    abscissa = spectral_abscissa(a_edge)
    ok = bool(abscissa < -eps)
    cert = None
    if certificate and factorization.n_edges:
        cert = sync_certificate(factorization)
    sim = None
    if simulate and factorization.n_edges and ok:
        if horizon is None:
            horizon = 20.0 / abs(abscissa)
        sim = simulate_disagreement(subsystem, factorization, horizon, seed)
    return SyncReport(ok, abscissa, eps, cert, sim)


def per_hour_to_rad_per_s(f):
    """Cycles per hour to radians per second (factor ``2 pi / 3600``)."""
    return 2.0 * np.pi * np.asarray(f, dtype=float) / SECONDS_PER_HOUR


def rad_per_s_to_per_hour(w):
    return np.asarray(w, dtype=float) * SECONDS_PER_HOUR / (2.0 * np.pi)


def log_grid(fmin: float, fmax: float, points: int = 200) -> np.ndarray:
    if not 0 < fmin < fmax:
        raise ValueError(f"need 0 < fmin < fmax, got fmin={fmin}, fmax={fmax}")
    if points < 2:
        raise ValueError("need at least 2 grid points")
    return np.logspace(np.log10(fmin), np.log10(fmax), points)


def _state_space(system):
    for names in (("a_net", "b_net", "c_net"), ("a", "b", "c")):
        if all(hasattr(system, n) for n in names):
            return tuple(np.asarray(getattr(system, n)) for n in names)
    a, b, c = system
    return np.asarray(a), np.asarray(b), np.asarray(c)


@dataclass(frozen=True)
class FrequencyResponse:
    """Transfer matrices ``T(j w)`` on a grid ``omega`` in rad/s."""

    omega: np.ndarray
    values: np.ndarray  # (n_freq, p, m) complex

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def freq_per_hr(self) -> np.ndarray:
        return rad_per_s_to_per_hour(self.omega)

    @property
    def gain(self) -> np.ndarray:
        """Largest entrywise magnitude per frequency (``|T|`` for SISO)."""
        return self.magnitudes.reshape(self.omega.size, -1).max(axis=1)


def frequency_response(system, omega) -> FrequencyResponse:
    """``c (j w I - a)^-1 b`` on ``omega`` (rad/s), one dense complex solve per point.

    ``system`` is a :class:`~netred.sysmodel.NetworkedSystem`, an
    :class:`~netred.sysmodel.EdgeSystem` or an ``(a, b, c)`` triple.

    Raises
    ------
    SingularAtFrequency
        If ``j w I - a`` is numerically singular at a grid point.
    """
    a, b, c = _state_space(system)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0) or not np.all(np.isfinite(omega)):
        raise ValueError("frequency grid must be finite and strictly positive")
    n = a.shape[0]
    out = np.empty((omega.size, c.shape[0], b.shape[1]), dtype=complex)
    for k, w in enumerate(omega):
        shifted = 1j * w * np.eye(n) - a
        cond = np.linalg.cond(shifted)
        if not np.isfinite(cond) or cond > FREQ_COND_MAX:
            raise SingularAtFrequency(f"jwI - a singular at w={w:.6g} rad/s (cond {cond:.3e})")
        out[k] = c @ np.linalg.solve(shifted, b.astype(complex))
    return FrequencyResponse(readonly(omega), readonly(out, dtype=complex))


@dataclass(frozen=True)
class ResponseComparison:
    rel_err: np.ndarray
    max_err: float
    rms_err: float


def compare_responses(full: FrequencyResponse, reduced: FrequencyResponse) -> ResponseComparison:
    """Per-frequency ``max|(|T_r| - |T_f|)| / max|T_f|`` plus max and RMS."""
    if full.omega.shape != reduced.omega.shape or not np.array_equal(full.omega, reduced.omega):
        raise GridMismatch("frequency grids differ")
    if full.values.shape != reduced.values.shape:
        raise GridMismatch(f"transfer shapes differ: {full.values.shape} vs {reduced.values.shape}")
    mf = full.magnitudes.reshape(full.omega.size, -1)
    mr = reduced.magnitudes.reshape(reduced.omega.size, -1)
    denom = mf.max(axis=1)
    num = np.abs(mr - mf).max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), np.where(num > 0, np.inf, 0.0))
    return ResponseComparison(readonly(rel), float(rel.max()), float(np.sqrt(np.mean(rel**2))))


CSV_HEADER = ["freq_per_hr", "|T|_full", "|T|_reduced", "rel_err"]


def write_frf_csv(path, full: FrequencyResponse, reduced: FrequencyResponse, comparison: ResponseComparison | None = None):
    if comparison is None:
        comparison = compare_responses(full, reduced)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for f, gf, gr, e in zip(full.freq_per_hr, full.gain, reduced.gain, comparison.rel_err):
            writer.writerow([f"{f:.17g}", f"{gf:.17g}", f"{gr:.17g}", f"{e:.17g}"])
