"""Vandermonde with Arnoldi: discrete orthogonal bases and least-squares fits.

The basis is built column by column. Column ``l`` is the coordinate
``r`` of the samples times an earlier column ``k`` (its parent in the index
set), orthogonalised against all previous columns by classical Gram-Schmidt
applied twice and scaled to 2-norm ``sqrt(M)``. The orthogonalisation
coefficients are kept in ``H`` and replayed to evaluate the basis anywhere.

``H`` is stored ``N x N``: column ``l`` holds the coefficients used to
build basis column ``l`` (rows ``0..l-1``) and its normaliser on the
diagonal ``H[l, l]``. In one dimension ``H[:, 1:]`` is the usual
``N x (N-1)`` Hessenberg matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geometry import SampleSet
from .indexing import MultiIndexSet, total_degree_indices

UNIT_ROUNDOFF = np.finfo(float).eps / 2
EVAL_CHUNK = 32768


class RankDeficiencyError(np.linalg.LinAlgError):
    """Orthogonalisation broke down: the samples cannot resolve the space."""

    def __init__(self, position: int, index: tuple, value: float, threshold: float):
        self.position = position
        self.index = index
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"rank loss at column {position} (index {index}): normaliser {value:.3e} "
            f"below {threshold:.3e}; add sample points")


@dataclass(frozen=True, eq=False)
class Approximant:
    """Coefficients with respect to a discrete orthogonal basis, plus the
    recurrence data needed to evaluate it anywhere."""

    d: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    index_set: MultiIndexSet
    domain: dict | None = None

    def __post_init__(self):
        if len(self.d) != len(self.index_set) or self.H.shape != (len(self.d),) * 2:
            raise ValueError("coefficient vector, H and index set disagree in size")

    @property
    def N(self) -> int:
        return len(self.d)

    def __call__(self, Y) -> np.ndarray:
        return evaluate(self, Y)

    def with_coefficients(self, d) -> "Approximant":
        return Approximant(np.asarray(d, dtype=float), self.H, self.index_set, self.domain)

    def to_dict(self) -> dict:
        return {
            "format": "polyva.approximant/1",
            "dim": self.index_set.dim,
            "kind": self.index_set.kind,
            "degree": self.index_set.degree,
            "indices": self.index_set.to_list(),
            "parent_rule": self.index_set.parent_rule,
            "H": self.H.tolist(),
            "d": self.d.tolist(),
            "domain": self.domain,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Approximant":
        if data.get("format") != "polyva.approximant/1":
            raise ValueError("not a serialized approximant")
        iset = MultiIndexSet(dim=data["dim"], kind=data["kind"], degree=data["degree"],
                             indices=np.array(data["indices"], dtype=np.int64),
                             parent_rule=data.get("parent_rule", "smallest"))
        return cls(np.array(data["d"], dtype=float), np.array(data["H"], dtype=float),
                   iset, data.get("domain"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "Approximant":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class ArnoldiBasis:
    """Discrete orthogonal basis ``Q`` (``M x N``, ``Q^T Q = M I``) on the samples."""

    Q: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    index_set: MultiIndexSet
    samples: SampleSet

    @property
    def M(self) -> int:
        return self.Q.shape[0]

    @property
    def N(self) -> int:
        return self.Q.shape[1]

    def hessenberg_1d(self) -> np.ndarray:
        """The ``N x (N-1)`` recurrence matrix of the one-dimensional case."""
        if self.index_set.dim != 1:
            raise ValueError("only defined for d = 1")
        return self.H[:, 1:].copy()

    def solve(self, values) -> np.ndarray:
        """Least-squares coefficients ``argmin ||Q d - f||`` via Householder QR."""
        return lstsq_qr(self.Q, _values(values, self.M))

    def approximant(self, d, domain: dict | None = None) -> Approximant:
        return Approximant(np.asarray(d, dtype=float), self.H, self.index_set, domain)

    def basis_values(self, Y) -> np.ndarray:
        return basis_values(self.H, self.index_set, Y)


def _values(values, M):
    f = np.asarray(values, dtype=float).reshape(-1)
    if f.shape[0] != M:
        raise ValueError(f"expected {M} function values, got {f.shape[0]}")
    if not np.all(np.isfinite(f)):
        raise ValueError("function values must be finite")
    return f


def _points(X, dim) -> np.ndarray:
    if isinstance(X, SampleSet):
        X = X.points
    pts = np.asarray(X, dtype=float)
    if pts.ndim <= 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, index set has {dim}")
    return pts


def lstsq_qr(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full-rank least squares by economic Householder QR."""
    q, r = scipy.linalg.qr(A, mode="economic", check_finite=False)
    return scipy.linalg.solve_triangular(r, q.T @ b, check_finite=False)


def rank_tolerance(M: int, N: int, hmax: float) -> float:
    return np.sqrt(M) * N * UNIT_ROUNDOFF * hmax


def build_basis(samples, index_set: MultiIndexSet) -> ArnoldiBasis:
    """Orthogonalise the Vandermonde columns of ``index_set`` on ``samples``."""
    if not isinstance(samples, SampleSet):
        samples = SampleSet(_points(samples, index_set.dim))
    X = _points(samples.points, index_set.dim)
    M, N = X.shape[0], len(index_set)
    if M <= N:
        raise ValueError(f"need more samples than basis functions (M={M}, N={N})")
    if np.any(index_set.indices[0] != 0):
        raise ValueError("index set must start with the zero index")
    parents, coords = index_set.schedule
    # column-major so that Q[:, :l] is a contiguous block for BLAS
    Q = np.zeros((M, N), order="F")
    H = np.zeros((N, N))
    Q[:, 0] = 1.0
    H[0, 0] = 1.0
    sqrtM = np.sqrt(M)
    hmax = 1.0
    for l in range(1, N):
        k, r = parents[l], coords[l]
        v = X[:, r] * Q[:, k]
        Ql = Q[:, :l]
        for _ in range(2):
            s = (Ql.T @ v) / M
            v -= Ql @ s
            H[:l, l] += s
        hmax = max(hmax, float(np.max(np.abs(H[:l, l]))))
        h = np.linalg.norm(v) / sqrtM
        tol = rank_tolerance(M, N, hmax)
        if not h > tol:
            raise RankDeficiencyError(l, index_set[l], h, tol)
        H[l, l] = h
        hmax = max(hmax, h)
        Q[:, l] = v / h
    return ArnoldiBasis(Q, H, index_set, samples)


def fit(samples, values, index_set: MultiIndexSet,
        domain: dict | None = None) -> tuple[ArnoldiBasis, Approximant]:
    """Multivariate V+A least-squares fit."""
    basis = build_basis(samples, index_set)
    d = basis.solve(values)
    return basis, basis.approximant(d, domain)


fit_mv = fit


def fit_1d(samples, values, n: int, domain: dict | None = None) -> tuple[ArnoldiBasis, Approximant]:
    """Univariate V+A fit of degree ``n`` (``N = n + 1`` basis functions)."""
    return fit(samples, values, total_degree_indices(1, n), domain)


def basis_values(H: np.ndarray, index_set: MultiIndexSet, Y) -> np.ndarray:
    """Replay the recurrence on new points: the ``K x N`` matrix ``U``."""
    Y = _points(Y, index_set.dim)
    K, N = Y.shape[0], len(index_set)
    parents, coords = index_set.schedule
    U = np.zeros((K, N), order="F")
    U[:, 0] = 1.0
    for l in range(1, N):
        k, r = parents[l], coords[l]
        v = Y[:, r] * U[:, k]
        v -= U[:, :l] @ H[:l, l]
        U[:, l] = v / H[l, l]
    return U


def evaluate(approx: Approximant, Y, chunk: int = EVAL_CHUNK) -> np.ndarray:
    """Evaluate ``sum_j d_j phi_j(y)`` at each row of ``Y``."""
    Y = _points(Y, approx.index_set.dim)
    out = np.empty(Y.shape[0])
    for start in range(0, Y.shape[0], chunk):
        sl = slice(start, start + chunk)
        out[sl] = basis_values(approx.H, approx.index_set, Y[sl]) @ approx.d
    return out


eval_1d = evaluate
eval_mv = evaluate
