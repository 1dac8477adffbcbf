from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyva.indexing import (
    MultiIndexSet,
    ReachabilityError,
    degree_for_dimension,
    is_reachable,
    leading_indices,
    make_index_set,
    max_degree_indices,
    parent_column,
    space_dimension,
    total_degree_indices,
)


def test_total_degree_d2_n2_listing():
    assert total_degree_indices(2, 2).to_list() == [[0, 0], [0, 1], [1, 0], [0, 2], [1, 1], [2, 0]]


def test_total_degree_1d_is_unique_grading():
    assert total_degree_indices(1, 3).to_list() == [[0], [1], [2], [3]]


def test_total_degree_d2_n9_has_55_terms():
    assert len(total_degree_indices(2, 9)) == 55 == 10 * 11 // 2


def test_max_degree_listings():
    assert max_degree_indices(2, 1).to_list() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert len(max_degree_indices(3, 1)) == 8
    assert max_degree_indices(1, 5).to_list() == [[k] for k in range(6)]


def test_parent_column_examples():
    iset = total_degree_indices(2, 2)
    # zero-based: (1,1) sits at position 4, parent (0,1) at position 1, step in coordinate 0
    assert parent_column(iset, 4) == (1, 0)
    assert parent_column(iset, 3) == (1, 1)  # (0,2) from (0,1)
    assert parent_column(iset, 5) == (2, 0)  # (2,0) from (1,0)


def test_parent_column_rejects_first_position():
    with pytest.raises(ValueError):
        parent_column(total_degree_indices(2, 2), 0)


def test_malformed_set_is_unreachable():
    bad = MultiIndexSet.from_list([[0, 0], [0, 2], [0, 1]])
    assert not is_reachable(bad)
    with pytest.raises(ReachabilityError):
        bad.schedule


def _grevlex_key(a):
    return (sum(a),) + tuple(-x for x in reversed(a))


@pytest.mark.parametrize("kind", ["total", "max"])
def test_exhaustive_reachability_and_cardinality(kind):
    for d in range(1, 5):
        for n in range(0, 11):
            if kind == "max" and (n + 1) ** d > 20000:
                continue
            iset = make_index_set(kind, d, n)
            rows = iset.to_list()
            assert len(rows) == space_dimension(kind, d, n)
            assert len({tuple(r) for r in rows}) == len(rows)
            assert rows[0] == [0] * d
            assert is_reachable(iset)
            parents, coords = iset.schedule
            for pos in range(1, len(rows)):
                k, r = parents[pos], coords[pos]
                step = np.array(rows[pos]) - np.array(rows[k])
                assert k < pos and step[r] == 1 and step.sum() == 1
            if kind == "total":
                assert len(rows) == comb(n + d, n)
                assert rows == sorted(rows, key=_grevlex_key)
                assert np.all(np.diff(iset.total_degrees) >= 0)
            else:
                assert rows == sorted(rows)


@given(st.integers(0, 15))
def test_1d_listings_coincide(n):
    assert total_degree_indices(1, n) == max_degree_indices(1, n)


@given(st.integers(1, 4), st.integers(1, 200))
def test_leading_indices_prefix_is_reachable(d, N):
    iset = leading_indices("total", d, N)
    assert len(iset) == N
    assert is_reachable(iset)
    full = total_degree_indices(d, degree_for_dimension("total", d, N))
    assert iset.to_list() == full.to_list()[:N]


def test_invalid_arguments():
    with pytest.raises(ValueError):
        total_degree_indices(0, 2)
    with pytest.raises(ValueError):
        max_degree_indices(2, -1)
    with pytest.raises(ValueError):
        make_index_set("hyperbolic", 2, 2)


def test_index_set_is_immutable():
    iset = total_degree_indices(2, 3)
    with pytest.raises(ValueError):
        iset.indices[0, 0] = 5


def test_largest_parent_rule():
    iset = make_index_set("total", 2, 2, "largest")
    assert parent_column(iset, 4) == (2, 1)  # (1,1) from (1,0)
    assert parent_column(iset, 3) == (1, 1)
    assert is_reachable(iset)
    assert iset != make_index_set("total", 2, 2)
    with pytest.raises(ValueError):
        make_index_set("total", 2, 2, "median")


@pytest.mark.parametrize("d", [2, 3, 4])
def test_largest_rule_reachable_exhaustive(d):
    for n in range(0, 11 if d < 4 else 8):
        iset = make_index_set("total", d, n, "largest")
        parents, coords = iset.schedule
        for pos in range(1, len(iset)):
            step = iset.indices[pos] - iset.indices[parents[pos]]
            assert step[coords[pos]] == 1 and step.sum() == 1
