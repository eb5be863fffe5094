"""Exact planar geometry for the four domain shapes.

Every domain is described two ways and the two descriptions are kept
consistent:

* a closed counterclockwise loop of boundary pieces (circular arcs and
  straight segments), used for exact distance-to-boundary queries, and
* a union of primitives (disks plus one convex polygon), used for the
  inside test.

The signed distance is negative inside, positive outside, and its absolute
value is the exact distance to the piecewise boundary.  The distance to the
boundary ``delta`` is the clamped negative part, so it is 0 on and outside
the boundary.

Shapes:

``Ball``
    disk of given center and radius.
``Stadium``
    convex hull of two equal-radius disks (two half-circle caps joined by
    the common tangent segments).  Coincident centers degenerate to a ball.
``Square``
    axis-aligned square given by center and half side.
``SEps``
    a stadium-like set built from a left disk of radius ``1 + eps`` at
    (-1, 0), a right unit disk at (1, 0), and the trapezoid between the
    chords joining (-1, +-(1+eps)) to (1, +-1).  For ``eps = 0`` this is
    exactly the stadium over centers (-1, 0), (1, 0) with radius 1; for
    ``eps > 0`` the distance function has a unique maximum at (-1, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi

# Tolerances shared with the tests: boundary-piece endpoints must close the
# loop to CLOSURE_TOL and sit on the zero level of the signed distance to
# ON_BOUNDARY_TOL.
CLOSURE_TOL = 1e-12
ON_BOUNDARY_TOL = 1e-10


class GeometryError(ValueError):
    """Invalid shape parameters or malformed geometric queries."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


# --------------------------------------------------------------------------
# Shape specifications
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: Point2
    radius: float


@dataclass(frozen=True)
class Stadium:
    centers: tuple[Point2, Point2]
    radius: float


@dataclass(frozen=True)
class Square:
    center: Point2
    half_side: float


@dataclass(frozen=True)
class SEps:
    eps: float


DomainSpec = Ball | Stadium | Square | SEps


# --------------------------------------------------------------------------
# Boundary pieces
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Arc:
    """Circular arc, traversed counterclockwise from angle_start to angle_end.

    ``angle_end > angle_start`` always; a full circle has a span of 2*pi.
    """

    center: Point2
    radius: float
    angle_start: float
    angle_end: float

    def point_at(self, theta: float) -> Point2:
        return Point2(self.center.x + self.radius * math.cos(theta),
                      self.center.y + self.radius * math.sin(theta))

    @property
    def start(self) -> Point2:
        return self.point_at(self.angle_start)

    @property
    def end(self) -> Point2:
        return self.point_at(self.angle_end)

    @property
    def length(self) -> float:
        return self.radius * (self.angle_end - self.angle_start)


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    @property
    def start(self) -> Point2:
        return self.a

    @property
    def end(self) -> Point2:
        return self.b

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


BoundaryPiece = Arc | Segment


# --------------------------------------------------------------------------
# Ridge sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SinglePoint:
    p: Point2


@dataclass(frozen=True)
class RidgeSegment:
    a: Point2
    b: Point2


@dataclass(frozen=True)
class NodeSet:
    points: tuple[Point2, ...]


RidgeSet = SinglePoint | RidgeSegment | NodeSet


# --------------------------------------------------------------------------
# Domain
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Domain:
    spec: DomainSpec
    pieces: tuple[BoundaryPiece, ...]
    bbox: tuple[Point2, Point2]
    # Encoded geometry shared with the compiled kernels: piece table plus the
    # union-of-primitives inside test (disks, convex-polygon half planes).
    piece_kind: np.ndarray
    piece_par: np.ndarray
    disks: np.ndarray
    planes: np.ndarray

    # -- scalar queries ----------------------------------------------------

    def signed_distance(self, p: Point2) -> float:
        return float(_kernels.sd_point(p.x, p.y, self.piece_kind,
                                       self.piece_par, self.disks, self.planes))

    def delta(self, p: Point2) -> float:
        """Distance to the boundary, clamped to 0 for outside points."""
        return max(0.0, -self.signed_distance(p))

    def inside(self, p: Point2) -> bool:
        return _kernels.inside_point(p.x, p.y, self.disks, self.planes)

    # -- vectorized reference implementation (numpy, kernel-independent) ----

    def signed_distance_many(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Pure-numpy signed distance; cross-validated against the kernels."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        best = np.full(xs.shape, np.inf)
        for piece in self.pieces:
            if isinstance(piece, Arc):
                vx = xs - piece.center.x
                vy = ys - piece.center.y
                rho = np.hypot(vx, vy)
                theta = np.arctan2(vy, vx)
                span = piece.angle_end - piece.angle_start
                on_arc = (theta - piece.angle_start) % TWO_PI <= span
                d_arc = np.abs(rho - piece.radius)
                p0, p1 = piece.start, piece.end
                d_ends = np.minimum(np.hypot(xs - p0.x, ys - p0.y),
                                    np.hypot(xs - p1.x, ys - p1.y))
                best = np.minimum(best, np.where(on_arc, d_arc, d_ends))
            else:
                ax, ay = piece.a.x, piece.a.y
                ex, ey = piece.b.x - ax, piece.b.y - ay
                ll = ex * ex + ey * ey
                t = np.clip(((xs - ax) * ex + (ys - ay) * ey) / ll, 0.0, 1.0)
                best = np.minimum(best, np.hypot(xs - (ax + t * ex),
                                                 ys - (ay + t * ey)))
        inside = np.zeros(xs.shape, dtype=bool)
        for cx, cy, r in self.disks:
            inside |= (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        if self.planes.shape[0] > 0:
            in_poly = np.ones(xs.shape, dtype=bool)
            for nx_, ny_, c in self.planes:
                in_poly &= nx_ * xs + ny_ * ys <= c
            inside |= in_poly
        return np.where(inside, -best, best)

    def delta_many(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, -self.signed_distance_many(xs, ys))


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------

def _ccw_polygon_planes(vertices: list[tuple[float, float]]) -> np.ndarray:
    """Half planes (nx, ny, c) with inside <=> nx*x + ny*y <= c for all rows."""
    planes = []
    n = len(vertices)
    for i in range(n):
        (x0, y0), (x1, y1) = vertices[i], vertices[(i + 1) % n]
        # outward normal of a CCW edge is the edge direction rotated by -90 deg
        nx_, ny_ = (y1 - y0), -(x1 - x0)
        planes.append((nx_, ny_, nx_ * x0 + ny_ * y0))
    return np.array(planes, dtype=float).reshape(-1, 3)


def _encode_pieces(pieces: tuple[BoundaryPiece, ...]) -> tuple[np.ndarray, np.ndarray]:
    kind = np.empty(len(pieces), dtype=np.int64)
    par = np.zeros((len(pieces), 6), dtype=float)
    for i, piece in enumerate(pieces):
        if isinstance(piece, Arc):
            kind[i] = 0
            par[i, :5] = (piece.center.x, piece.center.y, piece.radius,
                          piece.angle_start, piece.angle_end)
        else:
            kind[i] = 1
            par[i, :4] = (piece.a.x, piece.a.y, piece.b.x, piece.b.y)
    return kind, par


def build_domain(spec: DomainSpec) -> Domain:
    """Construct the boundary loop, inside test, and bounding box of a shape."""
    if isinstance(spec, Ball):
        if not spec.radius > 0:
            raise GeometryError(f"ball radius must be positive, got {spec.radius}")
        c, r = spec.center, spec.radius
        pieces = (Arc(c, r, 0.0, TWO_PI),)
        disks = np.array([[c.x, c.y, r]])
        planes = np.zeros((0, 3))
        bbox = (Point2(c.x - r, c.y - r), Point2(c.x + r, c.y + r))

    elif isinstance(spec, Stadium):
        if not spec.radius > 0:
            raise GeometryError(f"stadium radius must be positive, got {spec.radius}")
        c1, c2 = spec.centers
        r = spec.radius
        gap = math.hypot(c2.x - c1.x, c2.y - c1.y)
        if gap == 0.0:
            # coincident centers: the stadium is the ball
            pieces = (Arc(c1, r, 0.0, TWO_PI),)
            disks = np.array([[c1.x, c1.y, r]])
            planes = np.zeros((0, 3))
        else:
            phi = math.atan2(c2.y - c1.y, c2.x - c1.x)
            up = (math.cos(phi + 0.5 * math.pi), math.sin(phi + 0.5 * math.pi))
            dn = (-up[0], -up[1])
            pieces = (
                Arc(c1, r, phi + 0.5 * math.pi, phi + 1.5 * math.pi),
                Segment(Point2(c1.x + r * dn[0], c1.y + r * dn[1]),
                        Point2(c2.x + r * dn[0], c2.y + r * dn[1])),
                Arc(c2, r, phi - 0.5 * math.pi, phi + 0.5 * math.pi),
                Segment(Point2(c2.x + r * up[0], c2.y + r * up[1]),
                        Point2(c1.x + r * up[0], c1.y + r * up[1])),
            )
            disks = np.array([[c1.x, c1.y, r], [c2.x, c2.y, r]])
            planes = _ccw_polygon_planes([
                (c1.x + r * dn[0], c1.y + r * dn[1]),
                (c2.x + r * dn[0], c2.y + r * dn[1]),
                (c2.x + r * up[0], c2.y + r * up[1]),
                (c1.x + r * up[0], c1.y + r * up[1]),
            ])
        bbox = (Point2(min(c1.x, c2.x) - r, min(c1.y, c2.y) - r),
                Point2(max(c1.x, c2.x) + r, max(c1.y, c2.y) + r))

    elif isinstance(spec, Square):
        if not spec.half_side > 0:
            raise GeometryError(f"square half side must be positive, got {spec.half_side}")
        c, s = spec.center, spec.half_side
        corners = [(c.x - s, c.y - s), (c.x + s, c.y - s),
                   (c.x + s, c.y + s), (c.x - s, c.y + s)]
        pieces = tuple(Segment(Point2(*corners[i]), Point2(*corners[(i + 1) % 4]))
                       for i in range(4))
        disks = np.zeros((0, 3))
        planes = _ccw_polygon_planes(corners)
        bbox = (Point2(c.x - s, c.y - s), Point2(c.x + s, c.y + s))

    elif isinstance(spec, SEps):
        if spec.eps < 0:
            raise GeometryError(f"eps must be nonnegative, got {spec.eps}")
        eps = spec.eps
        rl = 1.0 + eps
        # Chord line through (-1, 1+eps) and (1, 1), parametrized
        # P(s) = (-1 + 2 s, (1+eps) - eps s).  It meets the left circle again
        # at s* = 2 eps (1+eps) / (4 + eps^2) (root of the line-circle
        # quadratic; s = 0 is the shared corner).  The boundary segment runs
        # from P(s*) to (1, 1), which lies on the right unit circle.
        s_star = 2.0 * eps * rl / (4.0 + eps * eps)
        t_top = Point2(-1.0 + 2.0 * s_star, rl - eps * s_star)
        t_bot = Point2(t_top.x, -t_top.y)
        theta = math.atan2(t_top.y, t_top.x + 1.0)
        pieces = (
            Arc(Point2(-1.0, 0.0), rl, theta, TWO_PI - theta),
            Segment(t_bot, Point2(1.0, -1.0)),
            Arc(Point2(1.0, 0.0), 1.0, -0.5 * math.pi, 0.5 * math.pi),
            Segment(Point2(1.0, 1.0), t_top),
        )
        disks = np.array([[-1.0, 0.0, rl], [1.0, 0.0, 1.0]])
        planes = _ccw_polygon_planes([(-1.0, -rl), (1.0, -1.0),
                                      (1.0, 1.0), (-1.0, rl)])
        bbox = (Point2(-2.0 - eps, -rl), Point2(2.0, rl))

    else:
        raise GeometryError(f"unknown domain spec {spec!r}")

    kind, par = _encode_pieces(pieces)
    domain = Domain(spec=spec, pieces=pieces, bbox=bbox, piece_kind=kind,
                    piece_par=par, disks=disks, planes=planes)
    _validate_boundary(domain)
    return domain


def _validate_boundary(domain: Domain) -> None:
    pieces = domain.pieces
    for i, piece in enumerate(pieces):
        nxt = pieces[(i + 1) % len(pieces)]
        gap = math.hypot(piece.end.x - nxt.start.x, piece.end.y - nxt.start.y)
        if len(pieces) > 1 and gap > CLOSURE_TOL:
            raise GeometryError(f"boundary loop not closed at piece {i}: gap {gap:.3e}")
        for endpoint in (piece.start, piece.end):
            sd = domain.signed_distance(endpoint)
            if abs(sd) > ON_BOUNDARY_TOL:
                raise GeometryError(
                    f"piece {i} endpoint off the zero level: |sd| = {abs(sd):.3e}")


# --------------------------------------------------------------------------
# Derived quantities
# --------------------------------------------------------------------------

def signed_distance(domain: Domain, p: Point2) -> float:
    return domain.signed_distance(p)


def delta(domain: Domain, p: Point2) -> float:
    return domain.delta(p)


def inradius(domain: Domain) -> float:
    """Radius of the largest inscribed ball, exact per shape."""
    spec = domain.spec
    if isinstance(spec, Ball):
        return spec.radius
    if isinstance(spec, Stadium):
        return spec.radius
    if isinstance(spec, Square):
        return spec.half_side
    return 1.0 + spec.eps


def lambda_value(domain: Domain) -> float:
    """Reciprocal of the inradius."""
    return 1.0 / inradius(domain)


def high_ridge(domain: Domain, ridge_tol: float) -> RidgeSet:
    """Set of maximizers of delta, exact per shape.

    ``ridge_tol`` is the membership tolerance downstream consumers snap
    with; it must be positive but does not affect the analytic set.
    """
    if not ridge_tol > 0:
        raise GeometryError(f"ridge_tol must be positive, got {ridge_tol}")
    spec = domain.spec
    if isinstance(spec, Ball):
        return SinglePoint(spec.center)
    if isinstance(spec, Square):
        return SinglePoint(spec.center)
    if isinstance(spec, Stadium):
        c1, c2 = spec.centers
        if c1 == c2:
            return SinglePoint(c1)
        return RidgeSegment(c1, c2)
    if spec.eps > 0:
        return SinglePoint(Point2(-1.0, 0.0))
    return RidgeSegment(Point2(-1.0, 0.0), Point2(1.0, 0.0))


def boundary_exit(domain: Domain, p: Point2, direction: tuple[float, float],
                  max_len: float) -> tuple[float, Point2] | None:
    """First boundary crossing of the ray p + t*direction, t in (0, max_len].

    Returns None when the whole segment stays inside.  ``direction`` must be
    a unit vector and ``p`` strictly inside.
    """
    dx, dy = direction
    norm = math.hypot(dx, dy)
    if abs(norm - 1.0) > 1e-9:
        raise GeometryError(f"direction must be a unit vector, |dir| = {norm}")
    if not max_len > 0:
        raise GeometryError(f"max_len must be positive, got {max_len}")
    status, t, qx, qy = _kernels.boundary_exit_ray(
        p.x, p.y, dx, dy, max_len, domain.piece_kind, domain.piece_par,
        domain.disks, domain.planes)
    if status == _kernels.EXIT_INSIDE:
        return None
    if status == _kernels.EXIT_NOT_BRACKETED:
        raise GeometryError(
            f"boundary_exit from ({p.x}, {p.y}): start point is not strictly inside")
    return t, Point2(qx, qy)


def boundary_samples(domain: Domain, n_per_piece: int) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced points along each boundary piece (arcs by angle)."""
    xs, ys = [], []
    for piece in domain.pieces:
        t = np.linspace(0.0, 1.0, n_per_piece, endpoint=False)
        if isinstance(piece, Arc):
            ang = piece.angle_start + t * (piece.angle_end - piece.angle_start)
            xs.append(piece.center.x + piece.radius * np.cos(ang))
            ys.append(piece.center.y + piece.radius * np.sin(ang))
        else:
            xs.append(piece.a.x + t * (piece.b.x - piece.a.x))
            ys.append(piece.a.y + t * (piece.b.y - piece.a.y))
    return np.concatenate(xs), np.concatenate(ys)


def convexity_defect(domain: Domain, n_pairs: int = 10_000, seed: int = 0) -> float:
    """Max signed distance over midpoints of random boundary chords.

    Nonpositive (up to roundoff) for the ball, square, stadium, and the
    eps = 0 variant of SEps.  For eps > 0 the chord construction leaves an
    O(eps^2) sliver outside the set at the arc/segment transitions, so the
    defect is small but positive there.  Diagnostic only; no solver
    component relies on convexity.
    """
    rng = np.random.default_rng(seed)
    xs, ys = boundary_samples(domain, 4096)
    i = rng.integers(0, xs.size, size=n_pairs)
    j = rng.integers(0, xs.size, size=n_pairs)
    mx, my = 0.5 * (xs[i] + xs[j]), 0.5 * (ys[i] + ys[j])
    return float(domain.signed_distance_many(mx, my).max())


def domain_json(domain: Domain) -> dict:
    """Shape block of the JSON reports."""
    spec = domain.spec
    out: dict = {}
    if isinstance(spec, Ball):
        out["shape"] = "ball"
        out["radius"] = spec.radius
    elif isinstance(spec, Stadium):
        out["shape"] = "stadium"
        out["radius"] = spec.radius
    elif isinstance(spec, Square):
        out["shape"] = "square"
        out["half_side"] = spec.half_side
    else:
        out["shape"] = "s_eps"
        out["eps"] = spec.eps
    out["lambda"] = lambda_value(domain)
    return out
