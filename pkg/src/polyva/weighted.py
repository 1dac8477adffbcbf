"""Leverage-weighted subsampling of V+A systems (VA+Weight) and the
QR-orthogonalised baseline (QR+Weight).

Rows of the ``M x N`` basis matrix are drawn i.i.d. with probability
proportional to their squared norm, rescaled, and the small system is
solved by least squares. The fitted basis (and its recurrence) is the one
built on all ``M`` samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import arnoldi
from .arnoldi import Approximant, ArnoldiBasis, RankDeficiencyError
from .baselines import MonomialApproximant, _affine, monomial_matrix
from .diagnostics import ortho_defect
from .geometry import Domain, SampleSet, rejection_sample
from .indexing import MultiIndexSet

# seed offset between resampling rounds when the basis is rank deficient
RESAMPLE_SEED_STRIDE = 7919


@dataclass(frozen=True, eq=False)
class LeverageDistribution:
    pi: np.ndarray = field(repr=False)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.ndim != 1 or np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be a strictly positive probability vector")

    def __len__(self):
        return self.pi.shape[0]


@dataclass(frozen=True, eq=False)
class WeightedSelection:
    k: np.ndarray = field(repr=False)
    Qhat: np.ndarray = field(repr=False)
    fhat: np.ndarray | None = field(default=None, repr=False)

    @property
    def M_hat(self) -> int:
        return self.k.shape[0]


@dataclass(frozen=True)
class GramReport:
    kappa2: float
    spectral_deviation: float
    stability_constant: float
    eps_m: float = 0.0
    delta_hat: float = 0.5


@dataclass
class WeightedFit:
    approximant: Approximant | MonomialApproximant
    report: GramReport
    samples: SampleSet
    selection: WeightedSelection
    pi: LeverageDistribution
    basis: ArnoldiBasis | None = None
    rounds: int = 1

    def __iter__(self):
        # unpacks as (approximant, report)
        return iter((self.approximant, self.report))


def leverage_from_matrix(Q: np.ndarray) -> LeverageDistribution:
    row = np.einsum("ij,ij->i", Q, Q)
    return LeverageDistribution(row / row.sum())


def compute_pi(basis: ArnoldiBasis) -> LeverageDistribution:
    """``pi_i = sum_j Q_ij^2 / ||Q||_F^2``."""
    return leverage_from_matrix(basis.Q)


def min_subsample_count(N: int, eps_m: float, delta_hat: float, alpha_hat: float) -> int:
    """``ceil(4 N (1 + eps_m) / delta_hat^2 * ln(2 N / alpha_hat))``.

    With this many weighted draws ``||G - I||_2 < delta_hat + eps_m`` holds
    with probability at least ``1 - alpha_hat``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if not 0 <= eps_m < 1:
        raise ValueError("eps_m must lie in [0, 1)")
    if not 0 < delta_hat < 1 - eps_m:
        raise ValueError("delta_hat must lie in (0, 1 - eps_m)")
    if not 0 < alpha_hat < 0.5:
        raise ValueError("alpha_hat must lie in (0, 1/2)")
    return math.ceil(4 * N * (1 + eps_m) / delta_hat**2 * math.log(2 * N / alpha_hat))


def mhat_rule_count(rule, N: int, constant: float = 4.0) -> int:
    """``"NlogN"`` gives ``ceil(constant * N ln N)``; integers pass through."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        return int(rule)
    if rule == "NlogN":
        return max(math.ceil(constant * N * math.log(N)), N)
    if rule == "N":
        return N
    raise ValueError(f"unknown M_hat rule {rule!r}")


def _row_scale(pi, k, M, M_hat):
    return 1.0 / np.sqrt(M_hat * M * pi[k])


def select_and_scale(Q, values, pi: LeverageDistribution, M_hat: int, seed) -> WeightedSelection:
    """Draw ``M_hat`` row indices i.i.d. from ``pi`` (with replacement) and
    scale the chosen rows by ``1 / sqrt(M_hat M pi_k)``."""
    if isinstance(Q, ArnoldiBasis):
        Q = Q.Q
    M, N = Q.shape
    if M_hat < N:
        raise ValueError(f"M_hat={M_hat} must be at least N={N}")
    rng = np.random.default_rng(seed)
    k = rng.choice(M, size=M_hat, replace=True, p=pi.pi)
    scale = _row_scale(pi.pi, k, M, M_hat)
    Qhat = Q[k] * scale[:, None]
    fhat = None if values is None else np.asarray(values, dtype=float)[k] * scale
    return WeightedSelection(k, Qhat, fhat)


def stability_constant(delta_hat: float, eps_m: float) -> float:
    """``sqrt(1 + delta + eps) / (1 - delta - eps)``; infinite if the denominator vanishes."""
    den = 1.0 - delta_hat - eps_m
    return math.sqrt(1.0 + delta_hat + eps_m) / den if den > 0 else math.inf


def gram_report(selection: WeightedSelection, delta_hat: float = 0.5, eps_m: float = 0.0) -> GramReport:
    G = selection.Qhat.T @ selection.Qhat
    ev = np.linalg.eigvalsh(G)
    kappa = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    dev = float(np.max(np.abs(ev - 1.0)))
    return GramReport(kappa, dev, stability_constant(delta_hat, eps_m), eps_m, delta_hat)


def _solve(Qhat, fhat):
    r = scipy.linalg.qr(Qhat, mode="r", check_finite=False)[0]
    if np.min(np.abs(np.diag(r))) > 0:
        return arnoldi.lstsq_qr(Qhat, fhat)
    return scipy.linalg.lstsq(Qhat, fhat, lapack_driver="gelsy", check_finite=False)[0]


def _draw(domain, f, M, seed, rounds_done):
    samples = rejection_sample(domain, M, seed + RESAMPLE_SEED_STRIDE * rounds_done)
    values = np.asarray(f(samples.points), dtype=float)
    return samples, values


def va_weight_fit(domain: Domain, f: Callable[[np.ndarray], np.ndarray], index_set: MultiIndexSet,
                  M: int, M_hat: int, seed: int, delta_hat: float = 0.5,
                  max_rounds: int = 5, samples: SampleSet | None = None) -> WeightedFit:
    """VA+Weight: random samples, V+A basis, leverage subsample, small solve.

    ``samples`` may be supplied to skip the random draw.
    """
    N = len(index_set)
    if not M >= M_hat >= N:
        raise ValueError(f"need M >= M_hat >= N, got M={M}, M_hat={M_hat}, N={N}")
    last = None
    for rnd in range(max_rounds):
        if samples is not None and rnd == 0:
            S, values = samples, np.asarray(f(samples.points), dtype=float)
        else:
            S, values = _draw(domain, f, M, seed, rnd)
        try:
            basis = arnoldi.build_basis(S, index_set)
        except RankDeficiencyError as err:
            last = err
            continue
        eps_m = ortho_defect(basis)
        pi = compute_pi(basis)
        sel = select_and_scale(basis.Q, values, pi, M_hat, [seed, 1])
        d = _solve(sel.Qhat, sel.fhat)
        approx = basis.approximant(d, domain.to_dict() if domain is not None else None)
        report = gram_report(sel, delta_hat, eps_m)
        return WeightedFit(approx, report, S, sel, pi, basis, rnd + 1)
    raise RankDeficiencyError(last.position, last.index, last.value, last.threshold) from last


def qr_weight_fit(domain: Domain, f: Callable[[np.ndarray], np.ndarray], index_set: MultiIndexSet,
                  M: int, M_hat: int, seed: int, delta_hat: float = 0.5, max_rounds: int = 5,
                  rescale: bool = True, samples: SampleSet | None = None) -> WeightedFit:
    """QR+Weight: as VA+Weight but the basis is the Q factor of the monomial matrix.

    The result evaluates as monomial coefficients ``c = R^-1 d``.
    """
    N = len(index_set)
    if not M >= M_hat >= N:
        raise ValueError(f"need M >= M_hat >= N, got M={M}, M_hat={M_hat}, N={N}")
    for rnd in range(max_rounds):
        if samples is not None and rnd == 0:
            S, values = samples, np.asarray(f(samples.points), dtype=float)
        else:
            S, values = _draw(domain, f, M, seed, rnd)
        X = S.points
        center, scale = _affine(X, rescale)
        A = monomial_matrix((X - center) / scale, index_set)
        q, r = scipy.linalg.qr(A, mode="economic", check_finite=False)
        if np.any(np.diag(r) == 0):
            continue
        sqrtM = math.sqrt(S.M)
        Q = q * sqrtM
        R = r / sqrtM
        eps_m = float(np.linalg.norm(Q.T @ Q / S.M - np.eye(N)))
        pi = leverage_from_matrix(Q)
        sel = select_and_scale(Q, values, pi, M_hat, [seed, 1])
        d = _solve(sel.Qhat, sel.fhat)
        c = scipy.linalg.solve_triangular(R, d, check_finite=False)
        approx = MonomialApproximant(c, index_set, center, scale)
        return WeightedFit(approx, gram_report(sel, delta_hat, eps_m), S, sel, pi, None, rnd + 1)
    raise np.linalg.LinAlgError("monomial matrix stayed exactly rank deficient after resampling")


def expected_gram(Q: np.ndarray, pi: LeverageDistribution) -> np.ndarray:
    """Exact ``E[G]`` for a single weighted draw, by enumeration over all rows."""
    M = Q.shape[0]
    out = np.zeros((Q.shape[1], Q.shape[1]))
    for k in range(M):
        q = Q[k]
        out += pi.pi[k] * np.outer(q, q) / (M * pi.pi[k])
    return out
