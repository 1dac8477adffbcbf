"""Polynomial least-squares fitting on irregular domains with Vandermonde
with Arnoldi (V+A), plus leverage-weighted subsampling, Lawson refinement
and basis diagnostics."""

from .arnoldi import (
    Approximant,
    ArnoldiBasis,
    RankDeficiencyError,
    build_basis,
    evaluate,
    fit,
    fit_1d,
)
from .geometry import (
    Box,
    ConvexPolygon,
    Domain,
    Ellipse,
    Interval,
    IntervalUnion,
    SampleSet,
    Union,
    equispaced_points,
    named_domain,
    rejection_sample,
)
from .indexing import MultiIndexSet, make_index_set, max_degree_indices, total_degree_indices

__version__ = "0.1.0"

__all__ = [
    "Approximant",
    "ArnoldiBasis",
    "Box",
    "ConvexPolygon",
    "Domain",
    "Ellipse",
    "Interval",
    "IntervalUnion",
    "MultiIndexSet",
    "RankDeficiencyError",
    "SampleSet",
    "Union",
    "build_basis",
    "equispaced_points",
    "evaluate",
    "fit",
    "fit_1d",
    "make_index_set",
    "max_degree_indices",
    "named_domain",
    "rejection_sample",
    "total_degree_indices",
]
