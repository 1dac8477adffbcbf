import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyva.geometry import (
    Box,
    ConvexPolygon,
    Ellipse,
    EmptyMeshError,
    Interval,
    IntervalUnion,
    MeshSpec,
    SamplingError,
    Union,
    admissible_spacing,
    default_c1,
    domain_from_dict,
    ellipse_in_box,
    equispaced_mesh,
    equispaced_points,
    indicator,
    m_rule_count,
    markov_constraint,
    named_domain,
    randomized_mesh_count,
    rejection_sample,
)


def test_indicator_examples():
    assert indicator(Ellipse((2.0, 3.0), (2.0, 3.0)), (2.0, 3.0))
    assert not indicator(IntervalUnion(((-3.0, -1.0), (3.0, 4.0))), 0.0)
    assert indicator(Box((-1.0, -1.0), (4.0, 6.0)), (4.0, 6.0))


def test_indicator_dimension_mismatch():
    with pytest.raises(ValueError):
        indicator(Box((0.0, 0.0), (1.0, 1.0)), (0.5,))


def test_interval_union_must_be_disjoint():
    with pytest.raises(ValueError):
        IntervalUnion(((0.0, 2.0), (1.0, 3.0)))
    with pytest.raises(ValueError):
        IntervalUnion(((1.0, 1.0),))


def test_equispaced_interval_nine_points():
    X = equispaced_mesh(Interval(-1, 1), 0.25)
    np.testing.assert_allclose(X.points[:, 0], np.linspace(-1, 1, 9), atol=1e-15)
    assert equispaced_points(Interval(-1, 1), 9).M == 9


def test_box_keeps_all_grid_nodes():
    dom = Box((-1.0, -1.0), (4.0, 6.0))
    X = equispaced_mesh(dom, 0.5)
    assert X.M == 11 * 15


@given(st.integers(2, 400))
def test_equispaced_count_on_interval(M):
    X = equispaced_points(Interval(-5, 10), M)
    assert X.M == M
    assert np.all(np.diff(X.points[:, 0]) > 0)


def test_equispaced_points_close_to_request_on_ellipse():
    dom = named_domain("ellipse")
    X = equispaced_points(dom, 5000)
    assert 5000 <= X.M <= 5000 + 5 + 0.001 * 5000
    assert np.all(dom.contains(X.points))


def test_ellipse_grid_retained_fraction():
    dom = named_domain("ellipse")
    X = equispaced_mesh(dom, 0.01)
    lo, hi = dom.bounding_box()
    nodes = np.prod(np.floor((hi - lo) / 0.01 + 1e-9) + 1)
    assert abs(X.M / nodes - 0.5959) < 0.01


def test_ellipse_in_box_geometry():
    e = ellipse_in_box((0.0, 0.0), (4.0, 6.0), 0.5959)
    lo, hi = e.bounding_box()
    np.testing.assert_allclose(lo, [0, 0], atol=1e-12)
    np.testing.assert_allclose(hi, [4, 6], atol=1e-12)
    assert math.isclose(e.area / 24.0, 0.5959, rel_tol=1e-12)


def test_empty_mesh_signals_refinement():
    # grid nodes 0.05, 0.35, 0.65, 0.95 miss both slivers
    with pytest.raises(EmptyMeshError):
        equispaced_mesh(IntervalUnion(((0.0, 0.01), (0.99, 1.0))), 0.3)


def test_admissible_spacing_examples():
    assert admissible_spacing(2, 4, 0.05, 2) == pytest.approx(0.003125, rel=1e-15)
    assert admissible_spacing(1, 1, 0.5, 2) == pytest.approx(1.0)
    assert markov_constraint(5, default_c1(5)) == pytest.approx(2 * 5 * (1 / 20) * math.exp(0.25))
    assert markov_constraint(5, default_c1(5)) < 1


@given(st.integers(1, 10_000))
def test_default_c1_always_admissible(N):
    MeshSpec(N=N)


def test_meshspec_rejects_violating_c1():
    with pytest.raises(ValueError):
        MeshSpec(N=10, c_1=0.1)


def test_randomized_mesh_count_examples():
    assert randomized_mesh_count(100, 1) == 922
    assert randomized_mesh_count(2, 1) == 3
    # 800 ln 400 = 4793.17..., so the ceiling is 4794
    assert 800 * math.log(400) == pytest.approx(4793.17, abs=0.01)
    assert randomized_mesh_count(400, 1) == 4794
    with pytest.raises(ValueError):
        randomized_mesh_count(2, 0)
    with pytest.raises(ValueError):
        randomized_mesh_count(1, 1)


def test_m_rules():
    assert m_rule_count("N^2", 7) == 49
    assert m_rule_count("N^2logN", 10) == math.ceil(100 * math.log(10))
    assert m_rule_count(123, 10) == 123
    with pytest.raises(ValueError):
        m_rule_count("cubic", 4)


def test_rejection_sample_reproducible_and_inside():
    dom = named_domain("domain2")
    a = rejection_sample(dom, 500, seed=3)
    b = rejection_sample(dom, 500, seed=3)
    c = rejection_sample(dom, 500, seed=4)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert np.all(dom.contains(a.points))
    assert len(np.unique(a.points, axis=0)) == a.M


def test_rejection_sample_box_accepts_everything():
    X = rejection_sample(Box((-1.0, -1.0), (4.0, 6.0)), 1000, seed=1)
    assert X.acceptance_rate == 1.0


def test_rejection_sample_singleton():
    X = rejection_sample(named_domain("ellipse"), 1, seed=5)
    assert X.M == 1 and indicator(named_domain("ellipse"), X.points[0])


def test_rejection_sample_ellipse_acceptance_rate():
    X = rejection_sample(named_domain("ellipse"), 100_000, seed=11)
    assert abs(X.acceptance_rate - 0.5959) < 0.01


def test_rejection_sampling_gives_up_on_tiny_domain():
    with pytest.raises(SamplingError):
        rejection_sample(Union((Box((0.0, 0.0), (1e-9, 1e-9)), Box((1e3, 1e3), (1e3 + 1e-9, 1e3 + 1e-9)))),
                         5, seed=0, max_consecutive_rejections=10_000)
    with pytest.raises(ValueError):
        rejection_sample(Interval(0, 1), 0, seed=0)


@pytest.mark.parametrize("name", ["example1", "unit_interval", "tensor", "domain1", "domain2", "domain3", "ellipse"])
def test_domain_dict_round_trip(name):
    dom = named_domain(name)
    again = domain_from_dict(dom.to_dict())
    pts = rejection_sample(Box(*map(tuple, dom.bounding_box())), 2000, seed=2).points
    np.testing.assert_array_equal(dom.contains(pts), again.contains(pts))


def test_polygon_contains_and_orientation():
    sq = ConvexPolygon(((1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)))
    assert indicator(sq, (0.0, 0.0)) and indicator(sq, (1.0, 1.0))
    assert not indicator(sq, (1.1, 0.0))


def test_sample_sets_respect_indicator_and_bounding_box():
    for name in ["example1", "domain2", "domain3", "ellipse"]:
        dom = named_domain(name)
        lo, hi = dom.bounding_box()
        for X in (equispaced_points(dom, 300), rejection_sample(dom, 300, seed=0)):
            assert np.all(dom.contains(X.points))
            assert np.all(X.points >= lo - 1e-12) and np.all(X.points <= hi + 1e-12)


def test_equispaced_coverage_of_convex_domain():
    dom = named_domain("domain3")
    s = 0.05
    X = equispaced_mesh(dom, s)
    probes = rejection_sample(dom, 10_000, seed=9).points
    # nearest-node infinity distance via the grid structure
    from scipy.spatial import cKDTree

    dist, _ = cKDTree(X.points).query(probes, p=np.inf)
    assert dist.max() <= s
