"""Multi-index sets for total-degree and maximum-degree polynomial spaces.

Indices are stored as an ``(N, d)`` integer array. Positions and
coordinates are zero-based throughout the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Literal

import numpy as np

Kind = Literal["total", "max"]
ParentRule = Literal["smallest", "largest"]
PARENT_RULES = ("smallest", "largest")


class ReachabilityError(ValueError):
    """Raised when an index cannot be reached from an earlier one by a unit step."""


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    """Ordered list of exponent vectors defining a polynomial space.

    The order fixes the column schedule of the Arnoldi process: every index
    after the first is obtained from an earlier one by adding a unit vector.
    ``parent_rule`` picks that earlier index: the smallest eligible position
    (default) or the largest. The largest rule keeps the evaluation
    recurrence far better conditioned on domains that are not centred boxes.
    """

    dim: int
    kind: Kind
    degree: int
    indices: np.ndarray = field(repr=False)
    parent_rule: ParentRule = "smallest"

    def __post_init__(self):
        if self.parent_rule not in PARENT_RULES:
            raise ValueError(f"parent_rule must be one of {PARENT_RULES}, got {self.parent_rule!r}")
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.dim)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return self.indices.shape[0]

    def __iter__(self):
        return (tuple(int(a) for a in row) for row in self.indices)

    def __getitem__(self, i):
        return tuple(int(a) for a in self.indices[i])

    def __eq__(self, other):
        if not isinstance(other, MultiIndexSet):
            return NotImplemented
        return (self.dim == other.dim and self.parent_rule == other.parent_rule
                and self.indices.shape == other.indices.shape
                and bool(np.all(self.indices == other.indices)))

    def __hash__(self):
        return hash((self.dim, self.parent_rule, self.indices.tobytes()))

    @property
    def total_degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    @cached_property
    def schedule(self) -> tuple[np.ndarray, np.ndarray]:
        """Parent positions and coordinates for every column after the first.

        Returns ``(parents, coords)`` of length ``N``; entry 0 is ``-1`` in both.
        """
        lookup = {tuple(row): i for i, row in enumerate(self.indices.tolist())}
        n = len(self)
        parents = np.full(n, -1, dtype=np.int64)
        coords = np.full(n, -1, dtype=np.int64)
        for pos in range(1, n):
            k, r = _find_parent(self.indices[pos], pos, lookup, self.parent_rule == "largest")
            parents[pos] = k
            coords[pos] = r
        parents.setflags(write=False)
        coords.setflags(write=False)
        return parents, coords

    def to_list(self) -> list[list[int]]:
        return self.indices.tolist()

    @classmethod
    def from_list(cls, indices, kind: Kind = "total", degree: int | None = None,
                  parent_rule: ParentRule = "smallest") -> "MultiIndexSet":
        arr = np.asarray(indices, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("indices must be a 2-D array of exponents")
        if degree is None:
            degree = int(arr.max()) if kind == "max" else int(arr.sum(axis=1).max())
        return cls(dim=arr.shape[1], kind=kind, degree=degree, indices=arr, parent_rule=parent_rule)

    def with_parent_rule(self, parent_rule: ParentRule) -> "MultiIndexSet":
        return MultiIndexSet(self.dim, self.kind, self.degree, self.indices.copy(), parent_rule)


def _find_parent(target: np.ndarray, pos: int, lookup: dict, largest: bool = False) -> tuple[int, int]:
    best = None
    for r in range(target.shape[0]):
        if target[r] == 0:
            continue
        cand = target.copy()
        cand[r] -= 1
        k = lookup.get(tuple(cand.tolist()))
        if k is not None and k < pos and (best is None or (k > best[0] if largest else k < best[0])):
            best = (k, r)
    if best is None:
        raise ReachabilityError(
            f"index {tuple(target.tolist())} at position {pos} has no earlier parent")
    return best


def _check_args(d: int, n: int):
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a non-negative integer, got {n!r}")


def total_degree_indices(d: int, n: int) -> MultiIndexSet:
    """All exponents with ``|alpha| <= n`` in ascending grevlex order.

    Within a degree, ``alpha`` precedes ``beta`` when the last nonzero entry
    of ``alpha - beta`` is positive.

    >>> total_degree_indices(2, 2).to_list()
    [[0, 0], [0, 1], [1, 0], [0, 2], [1, 1], [2, 0]]
    """
    _check_args(d, n)
    rows = [a for a in itertools.product(range(n + 1), repeat=d) if sum(a) <= n]
    rows.sort(key=lambda a: (sum(a),) + tuple(-x for x in reversed(a)))
    out = MultiIndexSet(dim=d, kind="total", degree=n, indices=np.array(rows, dtype=np.int64))
    assert len(out) == comb(n + d, n)
    return out


def max_degree_indices(d: int, n: int) -> MultiIndexSet:
    """All exponents with ``max(alpha) <= n`` in ascending lexicographic order."""
    _check_args(d, n)
    rows = list(itertools.product(range(n + 1), repeat=d))
    return MultiIndexSet(dim=d, kind="max", degree=n, indices=np.array(rows, dtype=np.int64))


def make_index_set(kind: Kind, d: int, n: int, parent_rule: ParentRule = "smallest") -> MultiIndexSet:
    if kind == "total":
        out = total_degree_indices(d, n)
    elif kind == "max":
        out = max_degree_indices(d, n)
    else:
        raise ValueError(f"unknown index-set kind {kind!r}")
    return out if parent_rule == "smallest" else out.with_parent_rule(parent_rule)


def space_dimension(kind: Kind, d: int, n: int) -> int:
    return comb(n + d, n) if kind == "total" else (n + 1) ** d


def degree_for_dimension(kind: Kind, d: int, N: int) -> int:
    """Smallest degree ``n`` whose space has dimension at least ``N``."""
    n = 0
    while space_dimension(kind, d, n) < N:
        n += 1
    return n


def parent_column(index_set: MultiIndexSet, position: int) -> tuple[int, int]:
    """Earlier position ``k`` and coordinate ``r`` with ``indices[k] + e_r == indices[position]``.

    ``k`` is the smallest such position unless the set uses ``parent_rule="largest"``.
    """
    if position < 1 or position >= len(index_set):
        raise ValueError(f"position must be in [1, {len(index_set) - 1}], got {position}")
    parents, coords = index_set.schedule
    return int(parents[position]), int(coords[position])


def is_reachable(index_set: MultiIndexSet) -> bool:
    if len(index_set) == 0 or np.any(index_set.indices[0] != 0):
        return False
    try:
        index_set.schedule
    except ReachabilityError:
        return False
    return True


def leading_indices(kind: Kind, d: int, N: int, parent_rule: ParentRule = "smallest") -> MultiIndexSet:
    """The first ``N`` indices of the smallest complete space holding ``N`` terms.

    A prefix of a graded listing is downward closed, so reachability is kept.
    Used when a sweep is stated in basis size rather than degree.
    """
    if N < 1:
        raise ValueError("N must be positive")
    n = degree_for_dimension(kind, d, N)
    full = make_index_set(kind, d, n, parent_rule)
    if len(full) == N:
        return full
    return MultiIndexSet(dim=d, kind=kind, degree=n, indices=full.indices[:N].copy(), parent_rule=parent_rule)
