"""Symbolic regions of R^d and the boundary-zone construction.

Every region is a frozen dataclass with a vectorized membership mask over an
(N, d) array of points. Regions are closed on their defining inequality
unless built with ``open=True`` (used for the interior boxes and balls that
are subtracted when forming boundary zones).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

NORMAL_TOLERANCE = 1e-12


class RegionError(ValueError):
    """Raised for malformed regions or mismatched dimensions."""


def _floats(values):
    return tuple(float(v) for v in np.atleast_1d(values))


def _points(points, dimension):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if dimension > 1 or pts.size == 1 else pts.reshape(-1, 1)
    if pts.shape[1] != dimension:
        raise RegionError(f"Points have dimension {pts.shape[1]}, region has {dimension}")
    return pts


class Region:
    """Base class; subclasses implement ``dimension`` and ``_mask``."""

    def mask(self, points):
        """Boolean membership for each row of an (N, d) array."""
        return self._mask(_points(points, self.dimension))


@dataclass(frozen=True)
class Halfspace(Region):
    """{x : x.u <= offset}; offsets of +/-inf give the whole space and the empty set."""
    normal: tuple
    offset: float
    open: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'normal', _floats(self.normal))
        object.__setattr__(self, 'offset', float(self.offset))
        if math.isnan(self.offset):
            raise RegionError("Halfspace offset is NaN")
        if abs(np.linalg.norm(self.normal) - 1.0) > NORMAL_TOLERANCE:
            raise RegionError(f"Halfspace normal {self.normal} is not a unit vector")

    @property
    def dimension(self):
        return len(self.normal)

    def _mask(self, pts):
        proj = pts @ np.array(self.normal)
        return proj < self.offset if self.open else proj <= self.offset


@dataclass(frozen=True)
class Interval(Region):
    lo: float
    hi: float
    open: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'lo', float(self.lo))
        object.__setattr__(self, 'hi', float(self.hi))
        if not self.lo <= self.hi:
            raise RegionError(f"Interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def dimension(self):
        return 1

    def _mask(self, pts):
        x = pts[:, 0]
        if self.open:
            return (self.lo < x) & (x < self.hi)
        return (self.lo <= x) & (x <= self.hi)


@dataclass(frozen=True)
class Ball(Region):
    center: tuple
    radius: float
    open: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'center', _floats(self.center))
        object.__setattr__(self, 'radius', float(self.radius))
        if not self.radius >= 0:
            raise RegionError(f"Ball radius must be nonnegative, got {self.radius}")

    @property
    def dimension(self):
        return len(self.center)

    def _mask(self, pts):
        sq = ((pts - np.array(self.center)) ** 2).sum(axis=1)
        return sq < self.radius ** 2 if self.open else sq <= self.radius ** 2


@dataclass(frozen=True)
class Box(Region):
    """Axis-aligned box in the coordinates of ``frame`` (rows: orthonormal box axes)."""
    lo: tuple
    hi: tuple
    frame: tuple = None
    open: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'lo', _floats(self.lo))
        object.__setattr__(self, 'hi', _floats(self.hi))
        if len(self.lo) != len(self.hi):
            raise RegionError("Box corners have different dimensions")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise RegionError(f"Box corners out of order: {self.lo} > {self.hi}")
        if self.frame is not None:
            frame = tuple(_floats(row) for row in self.frame)
            mat = np.array(frame)
            if mat.shape != (len(self.lo), len(self.lo)) or not np.allclose(
                    mat @ mat.T, np.eye(len(self.lo)), atol=1e-10):
                raise RegionError("Box frame must be an orthonormal d x d matrix")
            object.__setattr__(self, 'frame', frame)

    @property
    def dimension(self):
        return len(self.lo)

    def to_local(self, pts):
        return pts if self.frame is None else pts @ np.array(self.frame).T

    def _mask(self, pts):
        y = self.to_local(pts)
        lo, hi = np.array(self.lo), np.array(self.hi)
        if self.open:
            return ((lo < y) & (y < hi)).all(axis=1)
        return ((lo <= y) & (y <= hi)).all(axis=1)


@dataclass(frozen=True)
class VoronoiCell(Region):
    """{x : |x - s_i| <= |x - s_k| for all k}, ties included."""
    site: int
    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, 'sites', tuple(_floats(s) for s in self.sites))
        if not 0 <= self.site < len(self.sites):
            raise RegionError(f"Voronoi site index {self.site} out of range")
        if len({len(s) for s in self.sites}) != 1:
            raise RegionError("Voronoi sites have mixed dimensions")

    @property
    def dimension(self):
        return len(self.sites[0])

    def halfspaces(self):
        """The cell as an intersection of bisector halfspaces."""
        own = np.array(self.sites[self.site])
        result = []
        for k, other in enumerate(self.sites):
            if k == self.site:
                continue
            other = np.array(other)
            gap = other - own
            length = np.linalg.norm(gap)
            if length == 0:
                continue
            offset = (other @ other - own @ own) / (2 * length)
            result.append(Halfspace(gap / length, offset))
        return result

    def _mask(self, pts):
        sites = np.array(self.sites)
        sq = ((pts[:, None, :] - sites[None, :, :]) ** 2).sum(axis=2)
        return sq[:, self.site] <= sq.min(axis=1)


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    @property
    def dimension(self):
        return self.inner.dimension

    def _mask(self, pts):
        return ~self.inner._mask(pts)


@dataclass(frozen=True)
class Intersection(Region):
    left: Region
    right: Region

    def __post_init__(self):
        if self.left.dimension != self.right.dimension:
            raise RegionError(
                f"Cannot intersect regions of dimension {self.left.dimension} "
                f"and {self.right.dimension}"
            )

    @property
    def dimension(self):
        return self.left.dimension

    def _mask(self, pts):
        return self.left._mask(pts) & self.right._mask(pts)


@dataclass(frozen=True)
class BoundaryZone(Region):
    """Predicate form of B_delta[S] n B_delta[S^c] for shapes without a closed form.

    Membership uses lower bounds on the two distances, so the set is a
    superset of the exact zone.
    """
    region: Region
    delta: float

    @property
    def dimension(self):
        return self.region.dimension

    def _mask(self, pts):
        return ((distance(self.region, pts) <= self.delta)
                & (distance(complement(self.region), pts) <= self.delta))


def whole_space(dimension):
    return Halfspace(_unit(dimension), math.inf)


def empty_space(dimension):
    return Halfspace(_unit(dimension), -math.inf)


def _unit(dimension, axis=0):
    e = np.zeros(dimension)
    e[axis] = 1.0
    return e


def complement(region):
    if isinstance(region, Complement):
        return region.inner
    return Complement(region)


def intersect(*regions):
    result = regions[0]
    for region in regions[1:]:
        result = Intersection(result, region)
    return result


def union(*regions):
    return complement(intersect(*(complement(r) for r in regions)))


def contains(region, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != region.dimension:
        raise RegionError(f"Point has dimension {x.shape[0]}, region has {region.dimension}")
    return bool(region._mask(x.reshape(1, -1))[0])


def ball_around_mean(spec, k, delta):
    """Closed ball of diameter delta around mu_k (an Interval when d = 1)."""
    if not 0 <= k < spec.m:
        raise RegionError(f"Invalid component index {k} for a mixture of {spec.m}")
    if not delta > 0:
        raise RegionError(f"delta must be positive, got {delta}")
    center = spec.components[k].mean
    if spec.dimension == 1:
        return Interval(center[0] - delta / 2, center[0] + delta / 2)
    return Ball(center, delta / 2)


# -- one-dimensional interval algebra ----------------------------------------

def _merge(intervals):
    merged = []
    for lo, hi in sorted(i for i in intervals if i[0] <= i[1] and i[1] > -math.inf and i[0] < math.inf):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def complement_intervals(intervals):
    result = []
    cursor = -math.inf
    for lo, hi in intervals:
        if lo > cursor:
            result.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < math.inf:
        result.append((cursor, math.inf))
    return result


def _intersect_intervals(first, second):
    result = []
    for a_lo, a_hi in first:
        for b_lo, b_hi in second:
            lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
            if lo <= hi:
                result.append((lo, hi))
    return _merge(result)


def intervals_1d(region):
    """Closure of a 1D region as sorted, disjoint closed intervals (lo, hi)."""
    if region.dimension != 1:
        raise RegionError("Interval decomposition needs a one-dimensional region")
    if isinstance(region, Interval):
        return [(region.lo, region.hi)]
    if isinstance(region, Halfspace):
        if region.normal[0] > 0:
            return _merge([(-math.inf, region.offset)])
        return _merge([(-region.offset, math.inf)])
    if isinstance(region, Ball):
        c = region.center[0]
        return [(c - region.radius, c + region.radius)]
    if isinstance(region, Box):
        sign = 1.0 if region.frame is None else region.frame[0][0]
        lo, hi = sorted((sign * region.lo[0], sign * region.hi[0]))
        return [(lo, hi)]
    if isinstance(region, VoronoiCell):
        result = [(-math.inf, math.inf)]
        for half in region.halfspaces():
            result = _intersect_intervals(result, intervals_1d(half))
        return result
    if isinstance(region, Complement):
        return complement_intervals(intervals_1d(region.inner))
    if isinstance(region, Intersection):
        return _intersect_intervals(intervals_1d(region.left), intervals_1d(region.right))
    raise RegionError(f"No interval decomposition for {type(region).__name__}")


def from_intervals_1d(intervals):
    """Build a region (Interval or a union of Intervals) from closed intervals."""
    pieces = _merge(intervals)
    if not pieces:
        return empty_space(1)
    regions = []
    for lo, hi in pieces:
        if lo == -math.inf and hi == math.inf:
            return whole_space(1)
        if lo == -math.inf:
            regions.append(Halfspace((1.0,), hi))
        elif hi == math.inf:
            regions.append(Halfspace((-1.0,), -lo))
        else:
            regions.append(Interval(lo, hi))
    return regions[0] if len(regions) == 1 else union(*regions)


# -- distances ---------------------------------------------------------------

def distance(region, points):
    """Lower bound on dist(x, region) for each row; exact for convex primitives."""
    pts = _points(points, region.dimension)
    if isinstance(region, Halfspace):
        if region.offset == math.inf:
            return np.zeros(len(pts))
        if region.offset == -math.inf:
            return np.full(len(pts), math.inf)
        return np.maximum(pts @ np.array(region.normal) - region.offset, 0.0)
    if isinstance(region, Interval):
        x = pts[:, 0]
        return np.maximum.reduce([region.lo - x, np.zeros_like(x), x - region.hi])
    if isinstance(region, Ball):
        return np.maximum(np.linalg.norm(pts - np.array(region.center), axis=1) - region.radius, 0.0)
    if isinstance(region, Box):
        y = region.to_local(pts)
        gap = np.maximum(np.maximum(np.array(region.lo) - y, y - np.array(region.hi)), 0.0)
        return np.linalg.norm(gap, axis=1)
    if isinstance(region, VoronoiCell):
        return np.max([distance(h, pts) for h in region.halfspaces()], axis=0)
    if isinstance(region, Intersection):
        return np.maximum(distance(region.left, pts), distance(region.right, pts))
    if isinstance(region, Complement):
        return _depth(region.inner, pts)
    return np.zeros(len(pts))


def _depth(region, pts):
    """Lower bound on the distance from x to the complement of ``region``."""
    if isinstance(region, Halfspace):
        if region.offset == math.inf:
            return np.full(len(pts), math.inf)
        if region.offset == -math.inf:
            return np.zeros(len(pts))
        return np.maximum(region.offset - pts @ np.array(region.normal), 0.0)
    if isinstance(region, Interval):
        x = pts[:, 0]
        return np.maximum(np.minimum(x - region.lo, region.hi - x), 0.0)
    if isinstance(region, Ball):
        return np.maximum(region.radius - np.linalg.norm(pts - np.array(region.center), axis=1), 0.0)
    if isinstance(region, Box):
        y = region.to_local(pts)
        inner = np.minimum(y - np.array(region.lo), np.array(region.hi) - y).min(axis=1)
        return np.maximum(inner, 0.0)
    if isinstance(region, VoronoiCell):
        return np.min([_depth(h, pts) for h in region.halfspaces()], axis=0)
    if isinstance(region, Intersection):
        return np.minimum(_depth(region.left, pts), _depth(region.right, pts))
    if isinstance(region, Complement):
        return distance(region.inner, pts)
    return np.zeros(len(pts))


# -- boundary zones ----------------------------------------------------------

def boundary_zone(region, delta):
    """A = B_delta[S] n B_delta[S^c] for S = region.

    Exact for halfspaces, balls and every 1D region; the expanded box used for
    boxes contains the true delta-neighbourhood. Other shapes fall back to a
    BoundaryZone predicate.
    """
    if not delta > 0:
        raise RegionError(f"delta must be positive, got {delta}")
    d = region.dimension
    if d == 1:
        inside = intervals_1d(region)
        outside = complement_intervals(inside)
        grown_in = _merge([(lo - delta, hi + delta) for lo, hi in inside])
        grown_out = _merge([(lo - delta, hi + delta) for lo, hi in outside])
        return from_intervals_1d(_intersect_intervals(grown_in, grown_out))
    if isinstance(region, Complement):
        return boundary_zone(region.inner, delta)
    if isinstance(region, Halfspace):
        if not math.isfinite(region.offset):
            return empty_space(d)
        return Intersection(
            Halfspace(region.normal, region.offset + delta),
            Complement(Halfspace(region.normal, region.offset - delta, open=True)),
        )
    if isinstance(region, Box):
        lo, hi = np.array(region.lo), np.array(region.hi)
        grown = Box(lo - delta, hi + delta, frame=region.frame)
        if np.any(hi - lo <= 2 * delta):
            return grown
        return Intersection(grown, Complement(Box(lo + delta, hi - delta, frame=region.frame, open=True)))
    if isinstance(region, Ball):
        grown = Ball(region.center, region.radius + delta)
        if region.radius <= delta:
            return grown
        return Intersection(grown, Complement(Ball(region.center, region.radius - delta, open=True)))
    logger.warning("No closed-form boundary zone for %s; using the predicate form",
                   type(region).__name__)
    return BoundaryZone(region, float(delta))


# -- structural containment ----------------------------------------------------

def _as_ball(region):
    if isinstance(region, Ball):
        return np.array(region.center), region.radius
    if isinstance(region, Interval):
        return np.array([(region.lo + region.hi) / 2]), (region.hi - region.lo) / 2
    return None


def _ball_in(center, radius, outer):
    if isinstance(outer, Halfspace):
        reach = center @ np.array(outer.normal) + radius
        return bool(reach < outer.offset if outer.open else reach <= outer.offset)
    if isinstance(outer, Ball):
        reach = np.linalg.norm(center - np.array(outer.center)) + radius
        return bool(reach < outer.radius if outer.open else reach <= outer.radius)
    if isinstance(outer, Box):
        y = outer.to_local(center.reshape(1, -1))[0]
        lo, hi = np.array(outer.lo), np.array(outer.hi)
        if outer.open:
            return bool(np.all(lo < y - radius) and np.all(y + radius < hi))
        return bool(np.all(lo <= y - radius) and np.all(y + radius <= hi))
    if isinstance(outer, VoronoiCell):
        return all(_ball_in(center, radius, h) for h in outer.halfspaces())
    if isinstance(outer, Intersection):
        left = _ball_in(center, radius, outer.left)
        right = _ball_in(center, radius, outer.right)
        if left is False or right is False:
            return False
        return True if left and right else None
    if isinstance(outer, Complement):
        return _ball_outside(center, radius, outer.inner)
    return None


def _ball_outside(center, radius, region):
    """Whether the closed ball misses ``region`` entirely."""
    if isinstance(region, Halfspace):
        low = center @ np.array(region.normal) - radius
        return bool(low >= region.offset if region.open else low > region.offset)
    if isinstance(region, Ball):
        gap = np.linalg.norm(center - np.array(region.center)) - region.radius
        return bool(gap >= radius if region.open else gap > radius)
    if isinstance(region, Box):
        gap = distance(region, center.reshape(1, -1))[0]
        return bool(gap >= radius if region.open else gap > radius)
    if isinstance(region, Complement):
        return _ball_in(center, radius, region.inner)
    if isinstance(region, (Intersection, VoronoiCell)):
        parts = ((region.left, region.right) if isinstance(region, Intersection)
                 else region.halfspaces())
        if any(_ball_outside(center, radius, p) is True for p in parts):
            return True
        return None
    return None


def contained_in(inner, outer):
    """Decide inner ⊆ outer for a ball or interval ``inner``.

    Returns True or False when the pair is supported and None otherwise.
    """
    if inner.dimension != outer.dimension:
        raise RegionError("Containment test between regions of different dimension")
    ball = _as_ball(inner)
    if ball is None:
        return None
    center, radius = ball
    if inner.dimension == 1 and not isinstance(outer, BoundaryZone):
        try:
            pieces = intervals_1d(outer)
        except RegionError:
            return None
        lo, hi = center[0] - radius, center[0] + radius
        return any(a <= lo and hi <= b for a, b in pieces)
    result = _ball_in(center, radius, outer)
    return None if result is None else bool(result)


def disjoint(first, second):
    """True when the regions are structurally disjoint, None when undecided."""
    if first.dimension == 1 and not any(isinstance(r, BoundaryZone) for r in (first, second)):
        if not _intersect_intervals(intervals_1d(first), intervals_1d(second)):
            return True
        return None
    for a, b in ((first, second), (second, first)):
        if _as_ball(a) is not None and contained_in(a, complement(b)) is True:
            return True
    return None


# -- serialization -----------------------------------------------------------

def _num(value):
    return value if math.isfinite(value) else ('inf' if value > 0 else '-inf')


def region_to_dict(region):
    if isinstance(region, Halfspace):
        return {'shape': 'halfspace', 'normal': list(region.normal),
                'offset': _num(region.offset), 'open': region.open}
    if isinstance(region, Interval):
        return {'shape': 'interval', 'lo': _num(region.lo), 'hi': _num(region.hi)}
    if isinstance(region, Ball):
        return {'shape': 'ball', 'center': list(region.center), 'radius': region.radius}
    if isinstance(region, Box):
        data = {'shape': 'box', 'lo': list(region.lo), 'hi': list(region.hi)}
        if region.frame is not None:
            data['frame'] = [list(row) for row in region.frame]
        return data
    if isinstance(region, VoronoiCell):
        return {'shape': 'voronoi', 'site': region.site, 'sites': [list(s) for s in region.sites]}
    if isinstance(region, Complement):
        return {'shape': 'complement', 'of': region_to_dict(region.inner)}
    if isinstance(region, Intersection):
        return {'shape': 'intersection',
                'of': [region_to_dict(region.left), region_to_dict(region.right)]}
    raise RegionError(f"{type(region).__name__} is not serializable")


def region_from_dict(data):
    shape = data.get('shape')
    try:
        if shape == 'halfspace':
            normal = np.asarray(data['normal'], dtype=float)
            return Halfspace(normal / np.linalg.norm(normal), float(data['offset']),
                             open=bool(data.get('open', False)))
        if shape == 'interval':
            return Interval(float(data['lo']), float(data['hi']))
        if shape == 'ball':
            return Ball(data['center'], float(data['radius']))
        if shape == 'box':
            return Box(data['lo'], data['hi'], frame=data.get('frame'))
        if shape == 'voronoi':
            return VoronoiCell(int(data['site']), tuple(data['sites']))
        if shape == 'complement':
            return Complement(region_from_dict(data['of']))
        if shape == 'intersection':
            return intersect(*(region_from_dict(part) for part in data['of']))
    except (KeyError, TypeError) as exc:
        raise RegionError(f"Malformed {shape} region: missing or invalid {exc}") from exc
    raise RegionError(f"Unknown region shape '{shape}'")
