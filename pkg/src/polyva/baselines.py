"""Monomial-basis least squares and the bounding-box (frame) comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import arnoldi
from .geometry import Box, Domain, SampleSet, rejection_sample
from .indexing import MultiIndexSet


@dataclass(frozen=True, eq=False)
class MonomialApproximant:
    """``p(x) = sum_j c_j t(x)^alpha_j`` with ``t`` an affine map of ``x``.

    ``t(x) = (x - center) / scale``; raw monomials use center 0, scale 1.
    """

    c: np.ndarray = field(repr=False)
    index_set: MultiIndexSet
    center: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)
    cond: float = float("nan")
    rank: int | None = None

    @property
    def N(self) -> int:
        return len(self.c)

    def __call__(self, Y) -> np.ndarray:
        return evaluate_monomial(self, Y)


def monomial_matrix(X: np.ndarray, index_set: MultiIndexSet) -> np.ndarray:
    """``A[i, j] = prod_r X[i, r] ** alpha_j[r]``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    exps = index_set.indices
    pmax = int(exps.max(initial=0))
    A = np.ones((X.shape[0], len(index_set)))
    for r in range(X.shape[1]):
        powers = np.ones((X.shape[0], pmax + 1))
        for p in range(1, pmax + 1):
            powers[:, p] = powers[:, p - 1] * X[:, r]
        A *= powers[:, exps[:, r]]
    return A


def _affine(X: np.ndarray, rescale: bool):
    if not rescale:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    lo, hi = X.min(axis=0), X.max(axis=0)
    scale = (hi - lo) / 2
    scale[scale == 0] = 1.0
    return (lo + hi) / 2, scale


def vandermonde_fit(samples, values, index_set: MultiIndexSet, rescale: bool = True,
                    compute_cond: bool = True) -> MonomialApproximant:
    """Least squares in the monomial basis by rank-revealing QR.

    Rank-deficient systems yield the minimum-norm solution instead of an error.
    With ``rescale`` the samples are first mapped onto ``[-1, 1]^d``.
    """
    X = arnoldi._points(samples, index_set.dim)
    f = arnoldi._values(values, X.shape[0])
    center, scale = _affine(X, rescale)
    A = monomial_matrix((X - center) / scale, index_set)
    c, _, rank, sv = scipy.linalg.lstsq(A, f, lapack_driver="gelsy", check_finite=False)
    cond = float("nan")
    if compute_cond:
        sv = scipy.linalg.svdvals(A, check_finite=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return MonomialApproximant(c, index_set, center, scale, cond, int(rank))


def evaluate_monomial(approx: MonomialApproximant, Y, chunk: int = arnoldi.EVAL_CHUNK) -> np.ndarray:
    Y = arnoldi._points(Y, approx.index_set.dim)
    out = np.empty(Y.shape[0])
    for start in range(0, Y.shape[0], chunk):
        sl = slice(start, start + chunk)
        out[sl] = monomial_matrix((Y[sl] - approx.center) / approx.scale, approx.index_set) @ approx.c
    return out


@dataclass
class BoundingTensorResult:
    approximant: arnoldi.Approximant
    basis: arnoldi.ArnoldiBasis
    samples_in_domain: int
    note: str = ("f evaluated by its formula on the whole bounding box; "
                 "errors should be measured on the domain only")


def bounding_tensor_fit(domain: Domain, f: Callable[[np.ndarray], np.ndarray],
                        index_set: MultiIndexSet, M: int, seed: int) -> BoundingTensorResult:
    """V+A fit on ``M`` uniform samples from the bounding box of ``domain``.

    ``f`` must be defined on the whole box; NaN or infinite values are an error.
    """
    lo, hi = domain.bounding_box()
    box = Box(tuple(lo), tuple(hi))
    samples = rejection_sample(box, M, seed)
    values = np.asarray(f(samples.points), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("f is not defined on the whole bounding box; "
                         "supply an evaluator valid on the box")
    basis, approx = arnoldi.fit(samples, values, index_set, domain.to_dict())
    inside = int(np.count_nonzero(domain.contains(samples.points)))
    return BoundingTensorResult(approx, basis, inside)
