"""Edge Gramians from Lyapunov equations and diagonal generalized edge Gramians from LMIs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IllConditioned, Infeasible, NotHurwitz
from .graph import EdgeFactorization, left_null_vector, readonly
from .simplex import CoveringLP
from .sysmodel import EdgeSystem, Subsystem

KRON_COND_MAX = 1e12
FEAS_RTOL = 1e-8
BOUND_RTOL = 1e-6
CUT_BUDGET = 500
TRACE_RTOL = 1e-6


def _max_abs(m) -> float:
    return float(np.abs(m).max()) if np.size(m) else 0.0


def _min_eig(m) -> float:
    if np.size(m) == 0:
        return 0.0
    return float(np.linalg.eigvalsh((m + m.T) / 2)[0])


def solve_lyapunov(a, w) -> np.ndarray:
    """Solve ``a X + X a^T + w = 0`` by dense Kronecker vectorization.

    Parameters
    ----------
    a : (n, n) array
        Hurwitz matrix.
    w : (n, n) array
        Symmetric constant term.

    Returns
    -------
    X : (n, n) array
        Symmetrized solution ``(X + X^T) / 2``.

    Raises
    ------
    NotHurwitz
        If some eigenvalue of ``a`` has nonnegative real part.
    IllConditioned
        If ``I (x) a + a (x) I`` has condition number above 1e12.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n) or w.shape != (n, n):
        raise DimensionMismatch(f"a {a.shape} and w {w.shape} must be square of equal size")
    if n == 0:
        return np.zeros((0, 0))
    abscissa = np.linalg.eigvals(a).real.max()
    if abscissa >= 0:
        raise NotHurwitz(f"matrix is not Hurwitz (max real part {abscissa:.3e})")
    eye = np.eye(n)
    kron = np.kron(eye, a) + np.kron(a, eye)
    cond = np.linalg.cond(kron)
    if not np.isfinite(cond) or cond > KRON_COND_MAX:
        raise IllConditioned(f"Lyapunov operator condition number {cond:.3e} exceeds {KRON_COND_MAX:.0e}")
    x = np.linalg.solve(kron, -w.reshape(-1, order="F")).reshape((n, n), order="F")
    return (x + x.T) / 2


@dataclass(frozen=True)
class EdgeGramians:
    p_edge: np.ndarray
    q_dual: np.ndarray
    residual_p: float
    residual_q: float


def edge_gramians(edge_sys: EdgeSystem, dual_sys: EdgeSystem) -> EdgeGramians:
    """Controllability Gramian of the edge system, observability Gramian of the dual one."""
    if edge_sys.a.shape != dual_sys.a.shape:
        raise DimensionMismatch("edge and dual systems have different state dimensions")
    a = edge_sys.a
    wc = edge_sys.b @ edge_sys.b.T
    wo = dual_sys.c.T @ dual_sys.c
    p = solve_lyapunov(a, wc)
    q = solve_lyapunov(dual_sys.a.T, wo)
    res_p = _max_abs(a @ p + p @ a.T + wc)
    res_q = _max_abs(dual_sys.a.T @ q + q @ dual_sys.a + wo)
    return EdgeGramians(readonly(p), readonly(q), res_p, res_q)


# --------------------------------------------------------------------------
# diagonal LMI  a D + D a^T - s >= 0

def lmi_residual(a, d, s) -> np.ndarray:
    ad = a * d  # == a @ diag(d)
    return ad + ad.T - s


def _cut(a, v, s) -> tuple[np.ndarray, float]:
    # v^T (a D + D a^T - s) v >= 0  <=>  2 sum_k d_k v_k (a^T v)_k >= v^T s v
    return 2.0 * v * (a.T @ v), float(v @ s @ v)


@dataclass(frozen=True)
class DiagonalLMIResult:
    d: np.ndarray
    min_eig: float
    trace: float
    lower_bound: float
    cuts: int
    status: str  # "optimal", "converged", "polished" or "budget"


def _interior_from_hint(a, s, hint) -> np.ndarray | None:
    if hint is None:
        return None
    hint = np.asarray(hint, dtype=float)
    if np.any(hint <= 0):
        return None
    homog = _min_eig(lmi_residual(a, hint, np.zeros_like(s)))
    if homog <= 0:
        return None
    s_max = max(float(np.linalg.eigvalsh(s)[-1]), 0.0)
    return hint * (1.0 + 2.0 * s_max / homog)


def _kelley_interior(a, s, lp: CoveringLP, budget: int) -> tuple[np.ndarray, int]:
    """Strictly feasible point from cuts against the tightened LMI ``M(d) >= delta I``."""
    k = a.shape[0]
    delta = max(float(np.linalg.eigvalsh(s)[-1]), _max_abs(s), 1e-300)
    tight = CoveringLP(np.ones(k))
    d = np.zeros(k)
    used = 0
    while used < budget:
        lam, vecs = np.linalg.eigh(lmi_residual(a, d, s))
        if lam[0] >= delta / 2:
            return d, used
        for q in np.flatnonzero(lam < delta):
            row, rhs = _cut(a, vecs[:, q], s)
            tight.add_row(row, rhs + delta)
            lp.add_row(row, rhs)
            used += 1
        res = tight.solve()
        if res.status != "optimal":
            raise Infeasible("no strictly feasible diagonal exists for the tightened LMI")
        d = res.x
    raise Infeasible(f"no strictly feasible diagonal found within {budget} cuts")


def solve_diagonal_lmi(a, s, interior_hint=None, budget: int = CUT_BUDGET, rtol: float = TRACE_RTOL) -> DiagonalLMIResult:
    """Minimum-trace nonnegative diagonal ``d`` with ``a diag(d) + diag(d) a^T - s >= 0``.

    Eigenvector cutting planes: every cut ``2 sum_k d_k v_k (a^T v)_k >= v^T s v``
    comes from an eigenvector ``v`` of the residual, and the master LP
    ``min sum d, d >= 0`` over the accumulated cuts is solved by
    :class:`~netred.simplex.CoveringLP`, which gives a lower bound on the trace.

    The cuts are taken at boundary points: each LP solution is joined to a
    strictly feasible interior point and bisection finds the last feasible
    point on that segment. That point is the feasibility-restored candidate
    and the cut at the first infeasible point removes the LP solution. The
    interior point then moves halfway towards the boundary point, which
    keeps it strictly feasible (the minimum eigenvalue is concave in ``d``).

    The returned ``d`` always has ``min_eig >= 0``.

    Raises
    ------
    Infeasible
        If the cuts prove infeasibility or no strictly feasible point is
        found within the budget.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    s = np.atleast_2d(np.asarray(s, dtype=float))
    k = a.shape[0]
    if k == 0:
        return DiagonalLMIResult(np.zeros(0), 0.0, 0.0, 0.0, 0, "optimal")
    s = (s + s.T) / 2

    def lam_min(d):
        return _min_eig(lmi_residual(a, d, s))

    zero = np.zeros(k)
    if lam_min(zero) >= 0:
        return DiagonalLMIResult(zero, lam_min(zero), 0.0, 0.0, 0, "optimal")

    lp = CoveringLP(np.ones(k))
    cuts = 0
    interior = _interior_from_hint(a, s, interior_hint)
    if interior is None:
        interior, cuts = _kelley_interior(a, s, lp, budget)

    best = interior
    lower = 0.0
    status = "budget"
    while cuts < budget:
        res = lp.solve()
        if res.status != "optimal":
            raise Infeasible("cutting planes prove the LMI infeasible")
        d = res.x
        lower = max(lower, res.value)
        if lam_min(d) >= 0:
            best, lower, status = d, res.value, "optimal"
            break
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = (lo + hi) / 2
            if lam_min(interior + mid * (d - interior)) >= 0:
                lo = mid
            else:
                hi = mid
        boundary = interior + lo * (d - interior)
        if boundary.sum() < best.sum():
            best = boundary
        if best.sum() - lower <= rtol * best.sum():
            status = "converged"
            break
        outside = interior + hi * (d - interior)
        _, vecs = np.linalg.eigh(lmi_residual(a, outside, s))
        lp.add_row(*_cut(a, vecs[:, 0], s))
        cuts += 1
        lam, vecs = np.linalg.eigh(lmi_residual(a, d, s))
        for q in np.flatnonzero(lam < 0):
            lp.add_row(*_cut(a, vecs[:, q], s))
            cuts += 1
        interior = (interior + boundary) / 2
    if status == "budget" and best.sum() - lower > rtol * best.sum():
        polished = barrier_polish(a, s, interior, rtol * lower)
        if polished is not None and lam_min(polished) >= 0 and polished.sum() < best.sum():
            best, status = polished, "polished"
    return DiagonalLMIResult(best, lam_min(best), float(best.sum()), float(lower), cuts, status)


def barrier_polish(a, s, start, gap_tol: float, max_newton: int = 200) -> np.ndarray | None:
    """Log-det barrier path following for ``min sum d  s.t.  M(d) > 0``.

    ``start`` must be strictly feasible. Returns ``None`` if it is not.
    Each centering step minimizes ``t sum(d) - log det M(d)`` by damped
    Newton; ``t`` grows until the barrier gap ``k / t`` drops below
    ``gap_tol``.
    """
    k = a.shape[0]
    d = np.asarray(start, dtype=float).copy()

    def logdet(d):
        try:
            chol = np.linalg.cholesky(lmi_residual(a, d, s))
        except np.linalg.LinAlgError:
            return None
        return 2.0 * np.log(np.diag(chol)).sum()

    if logdet(d) is None:
        return None
    t = k / max(d.sum(), 1e-300)
    steps = 0
    while k / t > gap_tol and steps < max_newton:
        while steps < max_newton:
            n_inv = np.linalg.inv(lmi_residual(a, d, s))
            p = n_inv @ a
            grad = t - 2.0 * np.diag(p)
            hess = 2.0 * (p * p.T) + 2.0 * n_inv * (a.T @ n_inv @ a)
            step = -np.linalg.solve(hess, grad)
            decrement = -grad @ step
            steps += 1
            if decrement / 2 <= 1e-10:
                break
            f0 = t * d.sum() - logdet(d)
            alpha = 1.0
            while alpha > 1e-12:
                ld = logdet(d + alpha * step)
                if ld is not None and t * (d + alpha * step).sum() - ld <= f0 - 0.25 * alpha * decrement:
                    break
                alpha /= 2
            else:
                break
            d = d + alpha * step
        t *= 8.0
    return d


def balanced_scalings(factorization: EdgeFactorization):
    """Candidate strictly feasible diagonals for both edge LMIs.

    On a tree with every edge bidirectional, ``nu_i w_ij = nu_j w_ji = c_l``
    for edge ``l = (i, j)``, and then ``L_e diag(1/c)`` and ``diag(c) L_e``
    are symmetric positive definite. One-directional edges get a small
    reverse weight first. Yields ``(hint_c, hint_o)`` pairs for
    decreasing perturbations.
    """
    lap = factorization.laplacian
    w = np.where(np.eye(lap.shape[0], dtype=bool), 0.0, -lap)
    positive = w[w > 0]
    if positive.size == 0:
        return
    for eta in (1e-1, 1e-2, 1e-4, 1e-6):
        wp = w + eta * positive.min() * ((w == 0) & (w.T > 0))
        lp = np.diag(wp.sum(axis=1)) - wp
        try:
            nu = left_null_vector(lp)
        except ArithmeticError:
            continue
        c = np.array([nu[i] * wp[i, j] for i, j in factorization.edges])
        if np.all(c > 0):
            yield 1.0 / c, c


@dataclass(frozen=True)
class GeneralizedEdgeGramians:
    """Diagonals of the generalized edge Gramians and their certificates.

    ``feas_c``/``feas_o`` are the minimum eigenvalues of the LMI residuals
    and ``eps_c``/``eps_o`` the accepted slack (``1e-8 * scale``).
    """

    pi_c: np.ndarray
    pi_o: np.ndarray
    feas_c: float
    feas_o: float
    trace_c: float
    trace_o: float
    eps_c: float = 0.0
    eps_o: float = 0.0
    lower_c: float = 0.0
    lower_o: float = 0.0
    status_c: str = ""
    status_o: str = ""

    @property
    def products(self) -> np.ndarray:
        return self.pi_c * self.pi_o

    @property
    def certified(self) -> bool:
        return self.feas_c >= -self.eps_c and self.feas_o >= -self.eps_o


def lmi_data(factorization: EdgeFactorization, g, h):
    """``(a, s)`` pairs of the controllability and observability LMIs."""
    e, f, le = factorization.e_mat, factorization.f_mat, factorization.edge_laplacian
    ge = e.T @ np.asarray(g, dtype=float)
    hf = np.asarray(h, dtype=float) @ f
    return (le, ge @ ge.T), (le.T, hf.T @ hf)


def feasibility_scale(s) -> float:
    m = _max_abs(s)
    return m if m > 0 else 1.0


def generalized_edge_gramians(
    factorization: EdgeFactorization, g, h, budget: int = CUT_BUDGET, rtol: float = TRACE_RTOL
) -> GeneralizedEdgeGramians:
    """Minimum-trace diagonal generalized edge Gramians.

    Raises
    ------
    Infeasible
        If either LMI has no certified diagonal solution.
    """
    (ac, sc), (ao, so) = lmi_data(factorization, g, h)
    hints = list(balanced_scalings(factorization)) if factorization.n_edges else []

    def run(a, s, pick):
        for pair in hints:
            if _interior_from_hint(a, s, pair[pick]) is not None:
                return solve_diagonal_lmi(a, s, pair[pick], budget, rtol)
        return solve_diagonal_lmi(a, s, None, budget, rtol)

    rc = run(ac, sc, 0)
    ro = run(ao, so, 1)
    out = GeneralizedEdgeGramians(
        pi_c=readonly(rc.d),
        pi_o=readonly(ro.d),
        feas_c=rc.min_eig,
        feas_o=ro.min_eig,
        trace_c=rc.trace,
        trace_o=ro.trace,
        eps_c=FEAS_RTOL * feasibility_scale(sc),
        eps_o=FEAS_RTOL * feasibility_scale(so),
        lower_c=rc.lower_bound,
        lower_o=ro.lower_bound,
        status_c=rc.status,
        status_o=ro.status,
    )
    if not out.certified:
        raise Infeasible(f"generalized Gramians not certified (margins {out.feas_c:.3e}, {out.feas_o:.3e})")
    return out


@dataclass(frozen=True)
class BoundReport:
    min_eig_c: float
    min_eig_o: float
    scale_c: float
    scale_o: float

    @property
    def passed(self) -> bool:
        return self.min_eig_c >= -BOUND_RTOL * self.scale_c and self.min_eig_o >= -BOUND_RTOL * self.scale_o


def verify_gramian_bounds(gram: EdgeGramians, generalized: GeneralizedEdgeGramians, subsystem: Subsystem) -> BoundReport:
    """Check ``P_e <= Pi_c (x) Q^-1`` and ``Q_f <= Pi_o (x) Q``."""
    q = subsystem.q_mat
    upper_c = np.kron(np.diag(generalized.pi_c), np.linalg.inv(q))
    upper_o = np.kron(np.diag(generalized.pi_o), q)
    if upper_c.shape != gram.p_edge.shape or upper_o.shape != gram.q_dual.shape:
        raise DimensionMismatch(
            f"Gramian shapes {gram.p_edge.shape}/{gram.q_dual.shape} do not match bounds {upper_c.shape}"
        )
    return BoundReport(
        min_eig_c=_min_eig(upper_c - gram.p_edge),
        min_eig_o=_min_eig(upper_o - gram.q_dual),
        scale_c=_max_abs(upper_c),
        scale_o=_max_abs(upper_o),
    )

