"""Domains, equispaced meshes and rejection sampling.

All domains are closed sets. Point arrays have shape ``(M, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_REJECTION_CAP = 10**6


class EmptyMeshError(ValueError):
    """The grid spacing is too coarse to put any node inside the domain."""


class SamplingError(RuntimeError):
    """Rejection sampling gave up after too many consecutive rejections."""


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts


class Domain:
    """Base class. Subclasses provide ``dim``, ``_contains`` and ``bounding_box``."""

    dim: int
    # relative slack used by membership tests so that grid nodes placed on
    # the boundary by floating-point arithmetic are kept
    rtol: float = 1e-12

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return self._contains(pts)

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def _tol(self) -> float:
        lo, hi = self.bounding_box()
        return self.rtol * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class IntervalUnion(Domain):
    """Finite union of disjoint closed intervals on the real line."""

    intervals: tuple[tuple[float, float], ...]
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        if not ivs:
            raise ValueError("interval union needs at least one interval")
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"interval [{a}, {b}] must have a < b")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 <= b0:
                raise ValueError("intervals must be disjoint")
        object.__setattr__(self, "intervals", ivs)

    def _contains(self, pts):
        x = pts[:, 0]
        tol = self._tol()
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a - tol) & (x <= b + tol)
        return out

    def bounding_box(self):
        return np.array([self.intervals[0][0]]), np.array([self.intervals[-1][1]])

    def to_dict(self):
        return {"type": "intervals", "intervals": [list(iv) for iv in self.intervals]}


def Interval(a: float, b: float) -> IntervalUnion:
    return IntervalUnion(((a, b),))


@dataclass(frozen=True)
class Box(Domain):
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise ValueError("box needs lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _contains(self, pts):
        tol = self._tol()
        lo, hi = self.bounding_box()
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)

    def bounding_box(self):
        return np.array(self.lower), np.array(self.upper)

    def to_dict(self):
        return {"type": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Ellipse(Domain):
    """Ellipse (or axis-aligned ellipsoid for ``d != 2``).

    ``rotation`` is the counter-clockwise angle in radians of the first
    semi-axis; only allowed in two dimensions.
    """

    center: tuple[float, ...]
    semi_axes: tuple[float, ...]
    rotation: float = 0.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        s = tuple(float(v) for v in self.semi_axes)
        if len(c) != len(s) or not c:
            raise ValueError("center and semi_axes must have equal, positive length")
        if any(v <= 0 for v in s):
            raise ValueError("semi-axes must be positive")
        if self.rotation != 0.0 and len(c) != 2:
            raise ValueError("rotation is only supported for d = 2")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", s)
        object.__setattr__(self, "rotation", float(self.rotation))

    @property
    def dim(self) -> int:
        return len(self.center)

    def _local(self, pts):
        y = pts - np.array(self.center)
        if self.rotation:
            c, s = math.cos(self.rotation), math.sin(self.rotation)
            y = np.column_stack([c * y[:, 0] + s * y[:, 1], -s * y[:, 0] + c * y[:, 1]])
        return y / np.array(self.semi_axes)

    def _contains(self, pts):
        return np.sum(self._local(pts) ** 2, axis=1) <= 1.0 + 1e-12

    def bounding_box(self):
        c = np.array(self.center)
        a = np.array(self.semi_axes)
        if self.rotation:
            cr, sr = math.cos(self.rotation), math.sin(self.rotation)
            half = np.array([math.hypot(a[0] * cr, a[1] * sr), math.hypot(a[0] * sr, a[1] * cr)])
        else:
            half = a
        return c - half, c + half

    @property
    def area(self) -> float:
        return math.pi * math.prod(self.semi_axes) if self.dim == 2 else float("nan")

    def to_dict(self):
        return {"type": "ellipse", "center": list(self.center),
                "semi_axes": list(self.semi_axes), "rotation": self.rotation}


@dataclass(frozen=True)
class ConvexPolygon(Domain):
    """Convex polygon in the plane; vertices in either orientation."""

    vertices: tuple[tuple[float, float], ...]
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least three 2-D vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not (np.all(cross >= 0) or np.all(cross <= 0)):
            raise ValueError("polygon is not convex")
        if cross.sum() < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))

    def _contains(self, pts):
        v = np.asarray(self.vertices)
        e = np.roll(v, -1, axis=0) - v
        tol = self._tol()
        out = np.ones(pts.shape[0], dtype=bool)
        for (vx, vy), (ex, ey) in zip(v, e):
            # counter-clockwise: interior on the left of every edge
            out &= ex * (pts[:, 1] - vy) - ey * (pts[:, 0] - vx) >= -tol * math.hypot(ex, ey)
        return out

    def bounding_box(self):
        v = np.asarray(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    def to_dict(self):
        return {"type": "polygon", "vertices": [list(p) for p in self.vertices]}


@dataclass(frozen=True)
class Union(Domain):
    parts: tuple[Domain, ...]

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("union needs at least one part")
        if len({p.dim for p in parts}) != 1:
            raise ValueError("all parts of a union must share a dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def _contains(self, pts):
        out = np.zeros(pts.shape[0], dtype=bool)
        for p in self.parts:
            out |= p._contains(pts)
        return out

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def to_dict(self):
        return {"type": "union", "parts": [p.to_dict() for p in self.parts]}


def indicator(domain: Domain, x) -> bool:
    """True iff the single point ``x`` lies in the closed domain."""
    pts = np.asarray(x, dtype=float).reshape(-1)
    if pts.size != domain.dim:
        raise ValueError(f"point has dimension {pts.size}, domain has {domain.dim}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point must be finite")
    return bool(domain.contains(pts.reshape(1, -1))[0])


def domain_from_dict(spec: dict) -> Domain:
    kind = spec.get("type")
    if kind == "intervals":
        return IntervalUnion(tuple(tuple(iv) for iv in spec["intervals"]))
    if kind == "interval":
        return Interval(*spec["bounds"])
    if kind == "box":
        return Box(tuple(spec["lower"]), tuple(spec["upper"]))
    if kind == "ellipse":
        return Ellipse(tuple(spec["center"]), tuple(spec["semi_axes"]), spec.get("rotation", 0.0))
    if kind == "polygon":
        return ConvexPolygon(tuple(tuple(p) for p in spec["vertices"]))
    if kind == "union":
        return Union(tuple(domain_from_dict(p) for p in spec["parts"]))
    if kind == "named":
        return named_domain(spec["name"])
    raise ValueError(f"unknown domain type {kind!r}")


def ellipse_in_box(lower: Sequence[float], upper: Sequence[float], fill: float) -> Ellipse:
    """Rotated ellipse whose tight bounding box is ``[lower, upper]`` and whose
    area is ``fill`` times the box area.

    Requires ``fill <= pi / 4``.
    """
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    hx, hy = (hi - lo) / 2
    if not 0 < fill <= math.pi / 4:
        raise ValueError("fill must lie in (0, pi/4]")
    ab = 4 * hx * hy * fill / math.pi
    s = hx**2 + hy**2
    apb, amb = math.sqrt(s + 2 * ab), math.sqrt(max(s - 2 * ab, 0.0))
    a, b = (apb + amb) / 2, (apb - amb) / 2
    if a - b < 1e-14:
        theta = 0.0
    else:
        # a^2 cos^2 + b^2 sin^2 = hx^2
        cos2 = (2 * hx**2 - a**2 - b**2) / (a**2 - b**2)
        theta = 0.5 * math.acos(max(-1.0, min(1.0, cos2)))
    return Ellipse(tuple((lo + hi) / 2), (a, b), theta)


# Test domains used by the experiments. The elliptical domain fills 59.59%
# of its bounding box [0, 4] x [0, 6].
NAMED_DOMAINS = {
    "example1": lambda: IntervalUnion(((-3.0, -1.0), (3.0, 4.0))),
    "unit_interval": lambda: Interval(-1.0, 1.0),
    "tensor": lambda: Box((-1.0, -1.0), (4.0, 6.0)),
    "domain1": lambda: Box((-1.0, -1.0), (1.0, 1.0)),
    "domain2": lambda: Union((Box((-1.0, -1.0), (1.0, 0.0)), Box((-1.0, -1.0), (0.0, 1.0)))),
    "domain3": lambda: ConvexPolygon(tuple(
        (math.cos(2 * math.pi * k / 6), math.sin(2 * math.pi * k / 6)) for k in range(6))),
    "domain4": lambda: ellipse_in_box((0.0, 0.0), (4.0, 6.0), 0.5959),
}
NAMED_DOMAINS["ellipse"] = NAMED_DOMAINS["domain4"]


def named_domain(name: str) -> Domain:
    try:
        return NAMED_DOMAINS[name]()
    except KeyError:
        raise ValueError(f"unknown named domain {name!r}; known: {sorted(NAMED_DOMAINS)}") from None


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Ordered distinct sample points with provenance."""

    points: np.ndarray = field(repr=False)
    provenance: str = "equispaced"
    seed: int | None = None
    draws: int | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def acceptance_rate(self) -> float | None:
        return None if not self.draws else self.M / self.draws

    def __len__(self):
        return self.M


def _grid_axes(lo, hi, spacing):
    axes = []
    for a, b in zip(lo, hi):
        steps = math.floor((b - a) / spacing + 1e-9)
        offset = max(((b - a) - steps * spacing) / 2, 0.0)
        axes.append(np.clip(a + offset + spacing * np.arange(steps + 1), a, b))
    return axes


GRID_CHUNK = 1 << 20


def _grid_chunks(axes):
    """Yield the Cartesian product of ``axes`` in blocks along the first axis."""
    rest = _cartesian(axes[1:]) if len(axes) > 1 else np.zeros((1, 0))
    step = max(1, GRID_CHUNK // max(rest.shape[0], 1))
    first = axes[0]
    for start in range(0, len(first), step):
        head = first[start:start + step]
        yield np.column_stack([np.repeat(head, rest.shape[0]),
                               np.tile(rest, (len(head), 1))])


def _grid_count(domain, spacing):
    lo, hi = domain.bounding_box()
    axes = _grid_axes(lo, hi, spacing)
    if isinstance(domain, Box) or (isinstance(domain, IntervalUnion) and len(domain.intervals) == 1):
        return math.prod(len(a) for a in axes)
    return sum(int(np.count_nonzero(domain.contains(block))) for block in _grid_chunks(axes))


def _cartesian(axes):
    if not axes:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def equispaced_mesh(domain: Domain, spacing: float) -> SampleSet:
    """Regular grid of step ``spacing`` centred in the bounding box, kept
    where it meets the domain.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    lo, hi = domain.bounding_box()
    blocks = [b[domain.contains(b)] for b in _grid_chunks(_grid_axes(lo, hi, spacing))]
    pts = np.concatenate(blocks)
    if pts.shape[0] == 0:
        raise EmptyMeshError(f"no grid node with spacing {spacing} falls inside the domain")
    return SampleSet(pts, provenance="equispaced")


def spacing_for_count(domain: Domain, M: int) -> float:
    """Largest grid spacing whose equispaced mesh has at least ``M`` nodes."""
    if M < 1:
        raise ValueError("M must be positive")
    lo, hi = domain.bounding_box()
    if domain.dim == 1 and isinstance(domain, IntervalUnion) and len(domain.intervals) == 1:
        return float(hi[0] - lo[0]) / max(M - 1, 1)
    ext = hi - lo
    # bracket around the spacing implied by the filled fraction of a coarse grid
    coarse = float(np.prod(ext) / 4096) ** (1.0 / domain.dim)
    frac = max(_grid_count(domain, coarse) / _box_count(ext, coarse), 1e-6)
    guess = float(np.prod(ext) * frac / M) ** (1.0 / domain.dim)
    lo_s, hi_s = guess * 0.8, min(guess * 1.25, float(ext.max()) * 2)
    while _grid_count(domain, lo_s) < M:
        lo_s /= 1.5
    while _grid_count(domain, hi_s) >= M:
        lo_s, hi_s = hi_s, hi_s * 1.5
    # exact for small meshes; within 0.1% of M for large ones
    slack = int(M * 1e-3)
    for _ in range(80):
        mid = 0.5 * (lo_s + hi_s)
        c = _grid_count(domain, mid)
        if c >= M:
            lo_s = mid
            if c <= M + slack:
                break
        else:
            hi_s = mid
        if hi_s - lo_s <= 1e-13 * hi_s:
            break
    return lo_s


def _box_count(ext, spacing):
    return math.prod(math.floor(e / spacing + 1e-9) + 1 for e in ext)


def equispaced_points(domain: Domain, M: int) -> SampleSet:
    """Equispaced mesh with the fewest grid nodes that is at least ``M``."""
    return equispaced_mesh(domain, spacing_for_count(domain, M))


def rejection_sample(domain: Domain, M: int, seed: int,
                     max_consecutive_rejections: int = DEFAULT_REJECTION_CAP,
                     batch: int = 65536) -> SampleSet:
    """``M`` i.i.d. uniform points in the domain by rejection from its bounding box."""
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounding_box()
    kept = []
    n_kept = 0
    draws = 0
    run = 0
    while n_kept < M:
        cand = lo + (hi - lo) * rng.random((batch, domain.dim))
        ok = domain.contains(cand)
        hits = np.flatnonzero(ok)
        need = M - n_kept
        if hits.size == 0:
            run += batch
            draws += batch
            if run >= max_consecutive_rejections:
                raise SamplingError(
                    f"{run} consecutive rejections; domain may have near-zero volume")
            continue
        if run + hits[0] >= max_consecutive_rejections:
            raise SamplingError(
                f"{run + hits[0]} consecutive rejections; domain may have near-zero volume")
        gaps = np.diff(hits) - 1
        if gaps.size and gaps[: need - 1].max(initial=0) >= max_consecutive_rejections:
            raise SamplingError("too many consecutive rejections")
        if hits.size >= need:
            last = hits[need - 1]
            kept.append(cand[hits[:need]])
            draws += last + 1
            n_kept = M
        else:
            kept.append(cand[hits])
            n_kept += hits.size
            draws += batch
            run = batch - 1 - hits[-1]
    return SampleSet(np.concatenate(kept), provenance="random", seed=seed, draws=draws)


def admissible_spacing(C_M: float, n: int, c_1: float, r: float = 2.0) -> float:
    """Mesh width ``2 c_1 / (C_M n^r)`` that makes an equispaced grid admissible."""
    if C_M <= 0 or c_1 <= 0 or r <= 0 or n < 1:
        raise ValueError("C_M, c_1, r must be positive and n >= 1")
    return 2.0 * c_1 / (C_M * n**r)


def markov_constraint(N: int, c_1: float) -> float:
    """Left-hand side of ``2 N c_1 exp(N c_1) < 1``."""
    return 2.0 * N * c_1 * math.exp(N * c_1)


def default_c1(N: int) -> float:
    return 1.0 / (4 * N)


@dataclass(frozen=True)
class MeshSpec:
    C_M: float = 2.0
    n: int = 1
    N: int = 1
    c_1: float | None = None
    r: float = 2.0

    def __post_init__(self):
        if self.c_1 is None:
            object.__setattr__(self, "c_1", default_c1(self.N))
        if markov_constraint(self.N, self.c_1) >= 1:
            raise ValueError(f"c_1={self.c_1} violates 2 N c_1 exp(N c_1) < 1 for N={self.N}")

    def spacing(self) -> float:
        return admissible_spacing(self.C_M, self.n, self.c_1, self.r)


def randomized_mesh_count(M: int, c_r: float) -> int:
    """Random sample count ``ceil((c_r + 1) M ln M)`` for an admissible mesh
    with probability at least ``1 - M^-c_r``."""
    if M < 2:
        raise ValueError("M must be at least 2")
    if c_r <= 0:
        raise ValueError("c_r must be positive")
    return math.ceil((c_r + 1) * M * math.log(M))


def m_rule_count(rule, N: int) -> int:
    """Sample count from a rule name (``"N^2"``, ``"N^2logN"``) or an integer."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        return int(rule)
    if rule in ("N^2", "N2"):
        return N * N
    if rule in ("N^2logN", "N2logN"):
        return max(math.ceil(N * N * math.log(N)), N + 1)
    raise ValueError(f"unknown M rule {rule!r}")
