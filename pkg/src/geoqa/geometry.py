"""WKT parsing and the spatial predicates used by the query templates.

Topological predicates work on planar lon/lat coordinates; distances are
great-circle (haversine) distances in metres. Only exterior rings are
supported.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Sequence, Tuple, Union

EPS = 1e-9
EARTH_RADIUS_M = 6371008.8

Coord = Tuple[float, float]


class GeometryError(ValueError):
    pass


class WktSyntaxError(GeometryError):
    pass


class UnsupportedGeometryError(GeometryError):
    pass


class UnclosedRingError(GeometryError):
    pass


class CoordinateRangeError(GeometryError):
    pass


class GeometryTypeError(GeometryError):
    """Operand combination a predicate is not defined for."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    @property
    def coords(self) -> Tuple[Coord, ...]:
        return ((self.x, self.y),)


@dataclass(frozen=True)
class LineString:
    coords: Tuple[Coord, ...]

    def __post_init__(self):
        if len(self.coords) < 2:
            raise GeometryError("a linestring needs at least 2 points")


@dataclass(frozen=True)
class Polygon:
    ring: Tuple[Coord, ...]

    def __post_init__(self):
        if len(self.ring) < 4:
            raise GeometryError("a polygon ring needs at least 4 points")
        if self.ring[0] != self.ring[-1]:
            raise UnclosedRingError("polygon ring is not closed")

    @property
    def coords(self) -> Tuple[Coord, ...]:
        return self.ring


@dataclass(frozen=True)
class MultiPolygon:
    polygons: Tuple[Polygon, ...]

    def __post_init__(self):
        if not self.polygons:
            raise GeometryError("a multipolygon needs at least one polygon")

    @property
    def coords(self) -> Tuple[Coord, ...]:
        return tuple(c for p in self.polygons for c in p.ring)


Geometry = Union[Point, LineString, Polygon, MultiPolygon]


@dataclass(frozen=True)
class Mbr:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def as_tuple(self):
        return (self.min_x, self.min_y, self.max_x, self.max_y)


class CardinalDirection(str, Enum):
    NORTH = "north"
    SOUTH = "south"
    EAST = "east"
    WEST = "west"
    NORTHEAST = "northeast"
    NORTHWEST = "northwest"
    SOUTHEAST = "southeast"
    SOUTHWEST = "southwest"


# ---------------------------------------------------------------------------
# WKT

_TOKEN = re.compile(r"\s*(?:([A-Za-z]+)|([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|([(),]))")


def _tokenize(text: str) -> List[str]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise WktSyntaxError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        tokens.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise WktSyntaxError("unexpected end of WKT")
        if expected is not None and tok != expected:
            raise WktSyntaxError(f"expected {expected!r}, got {tok!r}")
        self.i += 1
        return tok

    def number(self) -> float:
        tok = self.take()
        try:
            return float(tok)
        except ValueError:
            raise WktSyntaxError(f"expected a number, got {tok!r}") from None

    def coord(self) -> Coord:
        x, y = self.number(), self.number()
        if self.peek() not in (",", ")"):
            raise WktSyntaxError("only 2D coordinates are supported")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise CoordinateRangeError("non-finite coordinate")
        if not (-180.0 <= x <= 180.0 and -90.0 <= y <= 90.0):
            raise CoordinateRangeError(f"coordinate out of range: ({x}, {y})")
        return (x, y)

    def coord_list(self) -> Tuple[Coord, ...]:
        self.take("(")
        out = [self.coord()]
        while self.peek() == ",":
            self.take(",")
            out.append(self.coord())
        self.take(")")
        return tuple(out)

    def polygon_body(self) -> Polygon:
        self.take("(")
        rings = [self.coord_list()]
        while self.peek() == ",":
            self.take(",")
            rings.append(self.coord_list())
        self.take(")")
        if len(rings) > 1:
            raise UnsupportedGeometryError("interior rings are not supported")
        ring = rings[0]
        if len(ring) >= 2 and ring[0] != ring[-1]:
            raise UnclosedRingError("polygon ring is not closed")
        if len(ring) < 4:
            raise WktSyntaxError("a polygon ring needs at least 4 points")
        return Polygon(ring)

    def geometry(self) -> Geometry:
        kind = self.take().upper()
        if kind == "POINT":
            self.take("(")
            x, y = self.coord()
            self.take(")")
            return Point(x, y)
        if kind == "LINESTRING":
            coords = self.coord_list()
            if len(coords) < 2:
                raise WktSyntaxError("a linestring needs at least 2 points")
            return LineString(coords)
        if kind == "POLYGON":
            return self.polygon_body()
        if kind == "MULTIPOLYGON":
            self.take("(")
            polys = [self.polygon_body()]
            while self.peek() == ",":
                self.take(",")
                polys.append(self.polygon_body())
            self.take(")")
            return MultiPolygon(tuple(polys))
        if kind.isalpha():
            raise UnsupportedGeometryError(f"unsupported geometry type {kind}")
        raise WktSyntaxError(f"expected a geometry type, got {kind!r}")


def parse_wkt(text: str) -> Geometry:
    """Parse POINT, LINESTRING, POLYGON or MULTIPOLYGON WKT.

    An optional ``<crs-iri>`` prefix, as allowed in GeoSPARQL literals, is
    skipped.
    """
    text = text.strip()
    if text.startswith("<"):
        end = text.find(">")
        if end < 0:
            raise WktSyntaxError("unterminated CRS IRI")
        text = text[end + 1:]
    parser = _Parser(text)
    geom = parser.geometry()
    if parser.peek() is not None:
        raise WktSyntaxError(f"trailing content after geometry: {parser.peek()!r}")
    return geom


def to_wkt(g: Geometry) -> str:
    def fmt(coords):
        return ", ".join(f"{x:g} {y:g}" for x, y in coords)

    if isinstance(g, Point):
        return f"POINT({g.x:g} {g.y:g})"
    if isinstance(g, LineString):
        return f"LINESTRING({fmt(g.coords)})"
    if isinstance(g, Polygon):
        return f"POLYGON(({fmt(g.ring)}))"
    return "MULTIPOLYGON(" + ", ".join(f"(({fmt(p.ring)}))" for p in g.polygons) + ")"


# ---------------------------------------------------------------------------
# planar primitives


def mbr(g: Geometry) -> Mbr:
    xs = [c[0] for c in g.coords]
    ys = [c[1] for c in g.coords]
    return Mbr(min(xs), min(ys), max(xs), max(ys))


def _polygons(g: Geometry) -> Tuple[Polygon, ...]:
    if isinstance(g, Polygon):
        return (g,)
    if isinstance(g, MultiPolygon):
        return g.polygons
    return ()


def _segments(coords: Sequence[Coord]) -> Iterator[Tuple[Coord, Coord]]:
    for i in range(len(coords) - 1):
        if coords[i] != coords[i + 1]:
            yield coords[i], coords[i + 1]


def _boundary_segments(g: Geometry) -> List[Tuple[Coord, Coord]]:
    """Linear elements of g: polygon edges, linestring segments."""
    if isinstance(g, Point):
        return []
    if isinstance(g, LineString):
        return list(_segments(g.coords))
    return [s for p in _polygons(g) for s in _segments(p.ring)]


def _cross(o: Coord, a: Coord, b: Coord) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _point_segment_dist(p: Coord, a: Coord, b: Coord) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    t = max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))


def _in_ring(p: Coord, ring: Sequence[Coord]) -> bool:
    # even-odd ray cast; boundary handled by the caller
    x, y = p
    inside = False
    for (x1, y1), (x2, y2) in _segments(ring):
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xi > x:
                inside = not inside
    return inside


def _classify(p: Coord, region: Geometry) -> str:
    """'boundary', 'interior' or 'exterior' of a (multi)polygon region."""
    polys = _polygons(region)
    for poly in polys:
        for a, b in _segments(poly.ring):
            if _point_segment_dist(p, a, b) <= EPS:
                return "boundary"
    for poly in polys:
        if _in_ring(p, poly.ring):
            return "interior"
    return "exterior"


def _segment_hits(p: Coord, q: Coord, a: Coord, b: Coord) -> List[float]:
    """Parameters t on p->q where it meets segment a->b (both ends of an overlap)."""
    r = (q[0] - p[0], q[1] - p[1])
    s = (b[0] - a[0], b[1] - a[1])
    denom = r[0] * s[1] - r[1] * s[0]
    qp = (a[0] - p[0], a[1] - p[1])
    rr = r[0] * r[0] + r[1] * r[1]
    scale = math.sqrt(rr) * math.hypot(*s)
    if abs(denom) <= EPS * scale:
        # parallel: only collinear overlaps count
        if _point_segment_dist(a, p, q) > EPS and _point_segment_dist(b, p, q) > EPS \
                and _point_segment_dist(p, a, b) > EPS and _point_segment_dist(q, a, b) > EPS:
            return []
        ts = []
        for c in (a, b):
            t = ((c[0] - p[0]) * r[0] + (c[1] - p[1]) * r[1]) / rr
            if -EPS <= t <= 1 + EPS:
                ts.append(min(1.0, max(0.0, t)))
        for c, t in ((p, 0.0), (q, 1.0)):
            if _point_segment_dist(c, a, b) <= EPS:
                ts.append(t)
        return ts
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    tol_t = EPS / math.sqrt(rr)
    tol_u = EPS / math.hypot(*s)
    if -tol_t <= t <= 1 + tol_t and -tol_u <= u <= 1 + tol_u:
        return [min(1.0, max(0.0, t))]
    return []


def _segments_intersect(p: Coord, q: Coord, a: Coord, b: Coord) -> bool:
    return bool(_segment_hits(p, q, a, b))


def _pieces(segments, region: Geometry) -> Iterator[str]:
    """Classification of every sub-segment after splitting at the region boundary."""
    edges = _boundary_segments(region)
    for p, q in segments:
        ts = {0.0, 1.0}
        for a, b in edges:
            ts.update(_segment_hits(p, q, a, b))
        ts = sorted(ts)
        for t0, t1 in zip(ts, ts[1:]):
            if t1 - t0 <= 1e-12:
                continue
            tm = (t0 + t1) / 2
            m = (p[0] + tm * (q[0] - p[0]), p[1] + tm * (q[1] - p[1]))
            yield _classify(m, region)


def _require_region(g: Geometry, name: str):
    if not isinstance(g, (Polygon, MultiPolygon)):
        raise GeometryTypeError(f"{name} requires a Polygon or MultiPolygon, got {type(g).__name__}")


# ---------------------------------------------------------------------------
# predicates


def sf_within(a: Geometry, b: Geometry) -> bool:
    """True when a lies inside the closed region b.

    A point on b's boundary counts as within; a line lying entirely on
    b's boundary does not.
    """
    _require_region(b, "sf_within")
    if isinstance(a, Point):
        return _classify((a.x, a.y), b) != "exterior"
    if isinstance(a, MultiPolygon):
        return all(sf_within(p, b) for p in a.polygons)
    if any(_classify(c, b) == "exterior" for c in a.coords):
        return False
    segs = list(_segments(a.coords))
    kinds = list(_pieces(segs, b))
    if "exterior" in kinds:
        return False
    if isinstance(a, LineString):
        return "interior" in kinds
    return True


def sf_crosses(a: Geometry, b: Geometry) -> bool:
    """Line/area crossing: part of the line is inside b and part outside."""
    if not isinstance(a, LineString):
        raise GeometryTypeError(f"sf_crosses requires a LineString first operand, got {type(a).__name__}")
    _require_region(b, "sf_crosses")
    kinds = set(_pieces(list(_segments(a.coords)), b))
    return "interior" in kinds and "exterior" in kinds


def _same_region(pa: Polygon, pb: Polygon) -> bool:
    return (all(k == "boundary" for k in _pieces(list(_segments(pa.ring)), pb))
            and all(k == "boundary" for k in _pieces(list(_segments(pb.ring)), pa)))


def _interiors_meet(a: Geometry, b: Geometry) -> bool:
    if "interior" in set(_pieces(_boundary_segments(a), b)):
        return True
    if "interior" in set(_pieces(_boundary_segments(b), a)):
        return True
    return any(_same_region(pa, pb) for pa in _polygons(a) for pb in _polygons(b))


def sf_touches(a: Geometry, b: Geometry) -> bool:
    """Area/area touch: boundaries meet, interiors are disjoint."""
    _require_region(a, "sf_touches")
    _require_region(b, "sf_touches")
    ea, eb = _boundary_segments(a), _boundary_segments(b)
    if not any(_segments_intersect(p, q, r, s) for p, q in ea for r, s in eb):
        return False
    return not _interiors_meet(a, b)


def intersects(a: Geometry, b: Geometry) -> bool:
    va, vb = a.coords, b.coords
    sa, sb = _boundary_segments(a), _boundary_segments(b)
    if isinstance(a, Point) and isinstance(b, Point):
        return math.hypot(a.x - b.x, a.y - b.y) <= EPS
    for p in va:
        if any(_point_segment_dist(p, r, s) <= EPS for r, s in sb):
            return True
    for p in vb:
        if any(_point_segment_dist(p, r, s) <= EPS for r, s in sa):
            return True
    if any(_segments_intersect(p, q, r, s) for p, q in sa for r, s in sb):
        return True
    if _polygons(b) and any(_classify(p, b) != "exterior" for p in va):
        return True
    if _polygons(a) and any(_classify(p, a) != "exterior" for p in vb):
        return True
    return False


# ---------------------------------------------------------------------------
# distance


def haversine_m(p: Coord, q: Coord) -> float:
    lon1, lat1, lon2, lat2 = map(math.radians, (p[0], p[1], q[0], q[1]))
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def _closest_on_segment(p: Coord, a: Coord, b: Coord) -> Coord:
    # equirectangular scaling so "closest" is measured roughly in metres
    k = math.cos(math.radians(p[1]))
    ax, bx, px = a[0] * k, b[0] * k, p[0] * k
    dx, dy = bx - ax, b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return a
    t = max(0.0, min(1.0, ((px - ax) * dx + (p[1] - a[1]) * dy) / L2))
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _vertex_to(p: Coord, g: Geometry) -> float:
    segs = _boundary_segments(g)
    if not segs:
        return min(haversine_m(p, c) for c in g.coords)
    return min(haversine_m(p, _closest_on_segment(p, a, b)) for a, b in segs)


def min_distance_m(a: Geometry, b: Geometry) -> float:
    """Minimum distance in metres; 0 when the geometries intersect."""
    if intersects(a, b):
        return 0.0
    return min(min(_vertex_to(p, b) for p in a.coords),
               min(_vertex_to(p, a) for p in b.coords))


# ---------------------------------------------------------------------------
# cardinal directions


def cardinal(a: Geometry, b: Geometry, direction) -> bool:
    """Whether a lies in the given tile of the nine-tile partition around mbr(b).

    Inequalities are strict: a geometry touching a tile line is not in
    the tile beyond it.
    """
    d = CardinalDirection(direction)
    A, B = mbr(a), mbr(b)
    above = A.min_y > B.max_y
    below = A.max_y < B.min_y
    right = A.min_x > B.max_x
    left = A.max_x < B.min_x
    x_overlap = not right and not left
    y_overlap = not above and not below
    return {
        CardinalDirection.NORTH: above and x_overlap,
        CardinalDirection.SOUTH: below and x_overlap,
        CardinalDirection.EAST: right and y_overlap,
        CardinalDirection.WEST: left and y_overlap,
        CardinalDirection.NORTHEAST: above and right,
        CardinalDirection.NORTHWEST: above and left,
        CardinalDirection.SOUTHEAST: below and right,
        CardinalDirection.SOUTHWEST: below and left,
    }[d]
