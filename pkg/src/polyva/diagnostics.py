"""Quantities that describe the quality of a discrete orthogonal basis and
of an approximant: orthogonality defect, Lebesgue constant estimate,
projection-norm factor, basis statistics and fine-mesh errors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .arnoldi import ArnoldiBasis, basis_values, fit
from .geometry import Box, Domain, IntervalUnion, SampleSet, equispaced_points

# Upper bounds on the norming constant C(X, Omega) for M = N^2 equispaced
# samples on an interval and on a square.
C_BOUND_INTERVAL = 2.0
C_BOUND_SQUARE = 2.0 + math.sqrt(2.0)

ROW_CHUNK = 2048


@dataclass
class DiagnosticsReport:
    ortho_defect: float
    lebesgue_estimate: float | None
    qqstar_factor: float
    s_n: float
    q_max: float
    sup_error: float | None = None
    legendre_deviation: float | None = None
    eval_points: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _pts(Y):
    return Y.points if isinstance(Y, SampleSet) else np.asarray(Y, dtype=float)


def ortho_defect(basis) -> float:
    """``||Q^T Q / M - I||_F``."""
    Q = basis.Q if isinstance(basis, ArnoldiBasis) else np.asarray(basis)
    M, N = Q.shape
    return float(np.linalg.norm(Q.T @ Q / M - np.eye(N)))


def lebesgue_estimate(basis: ArnoldiBasis, eval_mesh, chunk: int = ROW_CHUNK) -> float:
    """``max_y (1/M) sum_i |sum_j phi_j(y) Q_ij|`` over the evaluation mesh."""
    Y = _pts(eval_mesh)
    best = 0.0
    for start in range(0, Y.shape[0], chunk):
        U = basis_values(basis.H, basis.index_set, Y[start:start + chunk])
        L = np.abs(U @ basis.Q.T).sum(axis=1)
        best = max(best, float(L.max()))
    return best / basis.M


def lebesgue_function(basis: ArnoldiBasis, points, chunk: int = ROW_CHUNK) -> np.ndarray:
    Y = _pts(points)
    out = np.empty(Y.shape[0])
    for start in range(0, Y.shape[0], chunk):
        U = basis_values(basis.H, basis.index_set, Y[start:start + chunk])
        out[start:start + chunk] = np.abs(U @ basis.Q.T).sum(axis=1)
    return out / basis.M


def qqstar_factor(basis, chunk: int = ROW_CHUNK) -> float:
    """``(1/M) ||Q Q^T||_inf`` (largest absolute row sum), computed in row blocks."""
    Q = basis.Q if isinstance(basis, ArnoldiBasis) else np.asarray(basis)
    M = Q.shape[0]
    Qt = np.ascontiguousarray(Q.T)
    best = 0.0
    for start in range(0, M, chunk):
        rows = np.abs(Q[start:start + chunk] @ Qt).sum(axis=1)
        best = max(best, float(rows.max()))
    return best / M


def s_n_statistic(basis) -> float:
    """Mean absolute row sum of ``Q``."""
    Q = basis.Q if isinstance(basis, ArnoldiBasis) else np.asarray(basis)
    return float(np.mean(np.abs(Q.sum(axis=1))))


def q_max(basis) -> float:
    Q = basis.Q if isinstance(basis, ArnoldiBasis) else np.asarray(basis)
    return float(np.max(np.abs(Q)))


def legendre_values(x, N: int) -> np.ndarray:
    """``[L_1(x), ..., L_N(x)]`` (``L_1 = 1``) by the three-term recurrence."""
    x = np.asarray(x, dtype=float).reshape(-1)
    out = np.empty((x.shape[0], N))
    out[:, 0] = 1.0
    if N > 1:
        out[:, 1] = x
    for m in range(1, N - 1):
        # (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}, with P_m = L_{m+1}
        out[:, m + 1] = ((2 * m + 1) * x * out[:, m] - m * out[:, m - 1]) / (m + 1)
    return out


def legendre_deviation(basis: ArnoldiBasis, points=None, interval: tuple[float, float] | None = None,
                       domain: Domain | None = None, K_factor: int = 10) -> float:
    """Largest ``|phi_j(x) - sqrt(2j-1) L_j(eta(x))|`` over ``j <= N`` and the points.

    ``eta`` maps ``[a, b]`` onto ``[-1, 1]``. The interval defaults to the
    sample hull; the points default to ``K_factor * M`` equispaced nodes.
    """
    if basis.index_set.dim != 1:
        raise ValueError("Legendre comparison needs a one-dimensional basis")
    if domain is not None:
        if not isinstance(domain, IntervalUnion) or len(domain.intervals) != 1:
            raise ValueError("Legendre comparison needs a single interval")
        interval = domain.intervals[0]
    if interval is None:
        x = basis.samples.points[:, 0]
        interval = (float(x.min()), float(x.max()))
    a, b = interval
    if points is None:
        points = np.linspace(a, b, K_factor * basis.M)
    x = _pts(points).reshape(-1)
    N = basis.N
    scale = np.sqrt(2 * np.arange(1, N + 1) - 1)
    worst = 0.0
    for start in range(0, x.shape[0], 8 * ROW_CHUNK):
        xs = x[start:start + 8 * ROW_CHUNK]
        U = basis_values(basis.H, basis.index_set, xs)
        L = legendre_values(2 * (xs - a) / (b - a) - 1, N) * scale
        worst = max(worst, float(np.max(np.abs(U - L))))
    return worst


def sup_error(approx, f: Callable[[np.ndarray], np.ndarray], eval_mesh) -> float:
    """``max |f(y) - p(y)|`` over the mesh."""
    Y = _pts(eval_mesh)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    return float(np.max(np.abs(np.asarray(f(Y), dtype=float) - approx(Y))))


def error_bound_factor(basis, C: float) -> float:
    """``1 + C * (1/M) ||Q Q^T||_inf``, the near-optimality factor."""
    return 1.0 + C * qqstar_factor(basis)


def norming_constant_bound(domain: Domain) -> float | None:
    """Known bound on ``C(X, Omega)`` for ``M = N^2`` equispaced points, if any."""
    if isinstance(domain, IntervalUnion) and len(domain.intervals) == 1:
        return C_BOUND_INTERVAL
    if isinstance(domain, Box) and domain.dim == 2:
        return C_BOUND_SQUARE
    return None


def smoothness_family(k, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """``f_k(x) = sum_r |x_r|^(2k+1)``; ``k = inf`` gives ``sum_r sin(exp(x_r) cos(x_r))``."""
    if k == math.inf or k == "inf":
        return lambda X: np.sum(np.sin(np.exp(X[:, :d]) * np.cos(X[:, :d])), axis=1)
    p = 2 * int(k) + 1
    return lambda X: np.sum(np.abs(X[:, :d]) ** p, axis=1)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def convergence_errors(domain: Domain, f, degrees: Sequence[int], kind: str = "total",
                       K_factor: int = 10) -> list[tuple[int, int, float]]:
    """``(n, N, sup_error)`` for V+A fits with ``M = N^2`` equispaced samples."""
    from .indexing import make_index_set

    out = []
    for n in degrees:
        iset = make_index_set(kind, domain.dim, n)
        N = len(iset)
        X = equispaced_points(domain, max(N * N, N + 1))
        Y = equispaced_points(domain, K_factor * X.M)
        _, approx = fit(X, f(X.points), iset)
        out.append((n, N, sup_error(approx, f, Y)))
    return out


def smoothness_slope(domain: Domain, k, degrees: Sequence[int], K_factor: int = 10) -> float:
    """Measured exponent of ``sup_error ~ n^slope`` for the family ``f_k``."""
    f = smoothness_family(k, domain.dim)
    errs = convergence_errors(domain, f, degrees, K_factor=K_factor)
    return loglog_slope([e[0] for e in errs], [max(e[2], 1e-300) for e in errs])


def diagnose(basis: ArnoldiBasis, approx=None, f=None, eval_mesh=None,
             lebesgue: bool = True, legendre: bool = False) -> DiagnosticsReport:
    rep = DiagnosticsReport(
        ortho_defect=ortho_defect(basis),
        lebesgue_estimate=None,
        qqstar_factor=qqstar_factor(basis),
        s_n=s_n_statistic(basis),
        q_max=q_max(basis),
    )
    if eval_mesh is not None:
        rep.eval_points = int(_pts(eval_mesh).shape[0])
        if lebesgue:
            rep.lebesgue_estimate = lebesgue_estimate(basis, eval_mesh)
        if approx is not None and f is not None:
            rep.sup_error = sup_error(approx, f, eval_mesh)
    if legendre and basis.index_set.dim == 1:
        rep.legendre_deviation = legendre_deviation(basis)
    return rep
