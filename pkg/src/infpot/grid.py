"""Uniform Cartesian discretization of a domain.

The grid covers the domain's bounding box with one extra cell of margin on
every side.  Nodes are classified exterior / interior / ridge-fixed; delta
values are cached per node.  The wide stencil is the set of all integer
offsets inside the disk of radius ``k`` cells; arms that would leave the
domain are clipped at the exact boundary crossing and carry the Dirichlet
datum of the active problem instead of a neighbor value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .geometry import (Domain, GeometryError, NodeSet, Point2, RidgeSegment,
                       SinglePoint, high_ridge, inradius)

CLS_EXTERIOR = 0
CLS_INTERIOR = 1
CLS_RIDGE = 2

CLASS_LABELS = {CLS_EXTERIOR: "exterior", CLS_INTERIOR: "interior", CLS_RIDGE: "ridge"}


class GridError(ValueError):
    """Invalid discretization parameters."""


class ArmClippingError(RuntimeError):
    """A boundary crossing could not be bracketed for a stencil arm."""


@dataclass(frozen=True, eq=False)
class StencilSet:
    """Integer-offset disk stencil of radius ``k`` cells.

    ``offsets`` are sorted by (squared length, i, j); this is also the scan
    order of every nodewise pass, which pins tie-breaking deterministically.
    """

    k: int
    h: float
    offsets: np.ndarray      # (S, 2) int64
    unit_dir: np.ndarray     # (S, 2) float64
    arm_nom: np.ndarray      # (S,)   float64, |offset| * h

    @property
    def size(self) -> int:
        return self.offsets.shape[0]

    @property
    def radius(self) -> float:
        return self.k * self.h


def build_stencil(k: int, h: float) -> StencilSet:
    if k < 2:
        raise GridError(f"stencil radius k must be >= 2, got {k}")
    offs = [(i, j) for i in range(-k, k + 1) for j in range(-k, k + 1)
            if (i, j) != (0, 0) and i * i + j * j <= k * k]
    offs.sort(key=lambda ij: (ij[0] ** 2 + ij[1] ** 2, ij[0], ij[1]))
    offsets = np.array(offs, dtype=np.int64)
    norm = np.hypot(offsets[:, 0], offsets[:, 1])
    unit = offsets / norm[:, None]
    return StencilSet(k=k, h=h, offsets=offsets, unit_dir=unit, arm_nom=norm * h)


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    h: float
    origin: tuple[float, float]
    nx: int
    ny: int
    cls: np.ndarray          # (ny*nx,) int8
    delta: np.ndarray        # (ny*nx,) float64, clamped distance to boundary
    ridge_tol: float
    interior_flat: np.ndarray  # flat indices of interior nodes, row-major

    def node_xy(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.h, self.origin[1] + j * self.h)

    def flat_xy(self, flat: int) -> tuple[float, float]:
        return self.node_xy(flat % self.nx, flat // self.nx)

    def nearest_node(self, x: float, y: float) -> tuple[int, int]:
        i = min(self.nx - 1, max(0, round((x - self.origin[0]) / self.h)))
        j = min(self.ny - 1, max(0, round((y - self.origin[1]) / self.h)))
        return int(i), int(j)

    def nearest_interior_flat(self, x: float, y: float) -> int:
        """Interior node closest to (x, y); used for probe readouts."""
        xs, ys = self.node_coords()
        d2 = (xs[self.interior_flat] - x) ** 2 + (ys[self.interior_flat] - y) ** 2
        return int(self.interior_flat[int(np.argmin(d2))])

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        ii = np.arange(self.nx * self.ny) % self.nx
        jj = np.arange(self.nx * self.ny) // self.nx
        return self.origin[0] + ii * self.h, self.origin[1] + jj * self.h

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_interior(self) -> int:
        return int(self.interior_flat.size)

    @property
    def ridge_flat(self) -> np.ndarray:
        return np.flatnonzero(self.cls == CLS_RIDGE)


@dataclass(eq=False)
class Field:
    """Scalar node values on a grid; exterior entries stay 0 and masked."""

    grid: Grid
    values: np.ndarray   # (ny*nx,) float64

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def at_node(self, i: int, j: int) -> float:
        return float(self.values[j * self.grid.nx + i])

    def scaled(self, c: float) -> "Field":
        out = self.values * c
        out[self.grid.cls == CLS_EXTERIOR] = 0.0
        return Field(self.grid, out)


def field_from_function(grid: Grid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Field:
    """Sample ``fn`` on interior nodes; exterior nodes stay 0."""
    xs, ys = grid.node_coords()
    vals = np.zeros(grid.n_nodes)
    mask = grid.cls >= CLS_INTERIOR
    vals[mask] = fn(xs[mask], ys[mask])
    return Field(grid, vals)


def delta_field(grid: Grid) -> Field:
    return Field(grid, grid.delta.copy())


def ridge_distance(ridge, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Distance from points to the analytic ridge set."""
    if isinstance(ridge, SinglePoint):
        return np.hypot(xs - ridge.p.x, ys - ridge.p.y)
    if isinstance(ridge, RidgeSegment):
        ax, ay = ridge.a.x, ridge.a.y
        ex, ey = ridge.b.x - ax, ridge.b.y - ay
        t = np.clip(((xs - ax) * ex + (ys - ay) * ey) / (ex * ex + ey * ey),
                    0.0, 1.0)
        return np.hypot(xs - (ax + t * ex), ys - (ay + t * ey))
    pts = np.array([[p.x, p.y] for p in ridge.points])
    return np.min(np.hypot(np.asarray(xs)[..., None] - pts[None, :, 0],
                           np.asarray(ys)[..., None] - pts[None, :, 1]), axis=-1)


def build_grid(domain: Domain, h: float, k: int) -> tuple[Grid, StencilSet]:
    """Classify nodes, snap the ridge set to nodes, and build the stencil.

    The ridge snapping tolerance is ``max(2h, h*k/4)``: it must exceed the
    node spacing so a point ridge always captures at least one node.
    """
    if not h > 0:
        raise GridError(f"grid spacing must be positive, got {h}")
    if k < 2:
        raise GridError(f"stencil radius k must be >= 2, got {k}")
    rin = inradius(domain)
    if k * h >= rin:
        raise GridError(
            f"stencil span k*h = {k * h} must stay below the inradius {rin}")

    lo, hi = domain.bbox
    ox, oy = lo.x - h, lo.y - h
    nx = int(math.ceil((hi.x + h - ox) / h - 1e-9)) + 1
    ny = int(math.ceil((hi.y + h - oy) / h - 1e-9)) + 1

    cls, dlt = _kernels.classify_nodes(ox, oy, h, nx, ny, domain.piece_kind,
                                       domain.piece_par, domain.disks, domain.planes)
    interior = np.flatnonzero(cls >= CLS_INTERIOR)
    if interior.size == 0:
        raise GridError("no interior nodes; spacing too coarse for the domain")

    # Cheap cross-check of the exact inradius against the grid maximum of
    # delta before any consumer relies on it.
    dmax = float(dlt.max())
    if not (rin - 2.0 * h <= dmax <= rin + 1e-9):
        raise GridError(
            f"grid max of delta ({dmax}) inconsistent with inradius {rin}")

    ridge_tol = max(2.0 * h, h * k / 4.0)
    ridge = high_ridge(domain, ridge_tol)
    xs = ox + (interior % nx) * h
    ys = oy + (interior // nx) * h
    dist = ridge_distance(ridge, xs, ys)
    if isinstance(ridge, SinglePoint):
        anchors = [ridge.p]
    elif isinstance(ridge, RidgeSegment):
        anchors = [ridge.a, ridge.b]
    else:
        anchors = list(ridge.points)

    fixed = interior[dist <= ridge_tol + 1e-12]   # ulp slack keeps snapping symmetric
    cls[fixed] = CLS_RIDGE
    for p in anchors:
        # the node nearest each ridge anchor is always fixed
        near = interior[int(np.argmin(np.hypot(xs - p.x, ys - p.y)))]
        cls[near] = CLS_RIDGE

    grid = Grid(domain=domain, h=h, origin=(ox, oy), nx=nx, ny=ny, cls=cls,
                delta=dlt, ridge_tol=ridge_tol, interior_flat=interior)
    return grid, build_stencil(k, h)


# --------------------------------------------------------------------------
# Arm tables
# --------------------------------------------------------------------------

@dataclass(eq=False)
class ArmTable:
    """Dense per-(interior node, offset) sampling data for one Dirichlet datum.

    ``nb[r, s] >= 0``: full arm ending at that flat node, length ``arm[r, s]``
    (the nominal ``|offset|*h``).  ``nb[r, s] == -1``: clipped arm of length
    ``arm[r, s]`` carrying boundary value ``bval[r, s]``.
    """

    grid: Grid
    stencil: StencilSet
    rows: np.ndarray      # (N,) flat ids of interior nodes (row-major)
    row_of: np.ndarray    # (ny*nx,) int64, table row or -1
    nb: np.ndarray        # (N, S) int64
    arm: np.ndarray       # (N, S) float64
    bval: np.ndarray      # (N, S) float64

    def free_rows(self, fixed_flat: np.ndarray) -> np.ndarray:
        mask = np.ones(self.rows.size, dtype=bool)
        fixed_rows = self.row_of[fixed_flat]
        mask[fixed_rows[fixed_rows >= 0]] = False
        return np.flatnonzero(mask)


def build_arm_table(grid: Grid, stencil: StencilSet,
                    g: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None) -> ArmTable:
    """Precompute all arm samples; ``g`` is the boundary datum (default 0)."""
    rows = grid.interior_flat
    nbid, arm, qx, qy, err_node, err_off = _kernels.build_arm_tables(
        rows, grid.cls, grid.origin[0], grid.origin[1], grid.h, grid.nx, grid.ny,
        stencil.offsets, stencil.arm_nom, grid.domain.piece_kind,
        grid.domain.piece_par, grid.domain.disks, grid.domain.planes)
    if err_node >= 0:
        x, y = grid.flat_xy(int(err_node))
        di, dj = stencil.offsets[int(err_off)]
        raise ArmClippingError(
            f"no boundary crossing bracketed from node ({x}, {y}) "
            f"along offset ({di}, {dj})")
    bval = np.zeros_like(arm)
    if g is not None:
        clipped = nbid < 0
        if clipped.any():
            bval[clipped] = g(qx[clipped], qy[clipped])
    row_of = np.full(grid.n_nodes, -1, dtype=np.int64)
    row_of[rows] = np.arange(rows.size)
    return ArmTable(grid=grid, stencil=stencil, rows=rows, row_of=row_of,
                    nb=nbid, arm=arm, bval=bval)


def arm_sample(f: Field, node: tuple[int, int], offset: tuple[int, int],
               g: Callable[[float, float], float] | None = None) -> tuple[float, float]:
    """Single arm sample (value, arm length) from an interior node.

    Full arms return the field value at ``node + offset`` and the nominal
    length; clipped arms return the boundary datum at the exact exit point
    and the clipped length.
    """
    grid = f.grid
    i, j = node
    flat = j * grid.nx + i
    if not (0 <= i < grid.nx and 0 <= j < grid.ny) or grid.cls[flat] == CLS_EXTERIOR:
        raise GridError(f"arm_sample needs an interior node, got {node}")
    di, dj = offset
    length = math.hypot(di, dj) * grid.h
    i2, j2 = i + di, j + dj
    if 0 <= i2 < grid.nx and 0 <= j2 < grid.ny and grid.cls[j2 * grid.nx + i2] >= CLS_INTERIOR:
        return f.at_node(i2, j2), length
    x0, y0 = grid.node_xy(i, j)
    status, t, qx_, qy_ = _kernels.boundary_exit_ray(
        x0, y0, di * grid.h / length, dj * grid.h / length, length,
        grid.domain.piece_kind, grid.domain.piece_par, grid.domain.disks,
        grid.domain.planes)
    if status != _kernels.EXIT_OK:
        sd_end = grid.domain.signed_distance(Point2(x0 + di * grid.h, y0 + dj * grid.h))
        if status == _kernels.EXIT_INSIDE and sd_end > -1e-12:
            t, qx_, qy_ = length, x0 + di * grid.h, y0 + dj * grid.h
        else:
            raise ArmClippingError(
                f"no boundary crossing bracketed from node {node} along offset {offset}")
    return (0.0 if g is None else float(g(qx_, qy_))), float(t)


def dump_field_csv(f: Field, path) -> None:
    """CSV dump ``x,y,class,delta,value``, one row per node, row-major."""
    grid = f.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,class,delta,value\n")
        h = grid.h
        ox, oy = grid.origin
        for j in range(grid.ny):
            base = j * grid.nx
            y = oy + j * h
            for i in range(grid.nx):
                flat = base + i
                fh.write("%.9g,%.9g,%s,%.9g,%.9g\n"
                         % (ox + i * h, y, CLASS_LABELS[int(grid.cls[flat])],
                            grid.delta[flat], f.values[flat]))
