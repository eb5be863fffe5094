"""Discrete check of the first-eigenfunction equation.

A nonnegative candidate u vanishing on the boundary is tested against

    max(lambda - |grad u| / u,  D u) = 0

nodewise, with |grad u| the steepest-descent slope over the wide stencil and
D the discrete normalized infinity Laplacian.  Two residual fields are
formed on interior nodes where u is not numerically zero:

    a = lambda - |grad u| / u      (all such nodes)
    b = D u                        (all such nodes except ridge-fixed ones)

The verdict fails when a or b is significantly positive anywhere
(supersolution violated), or when a connected cluster of nodes has both
residuals strictly negative (the equation requires one of the two terms to
vanish at every point).  Default margins are calibrated so the distance
function passes on the ball and the stadium and fails on the square across
spacings h in {0.04, 0.02, 0.01} at k = 4; the numbers used are recorded in
every report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .grid import ArmTable, CLS_RIDGE, Field, GridError, StencilSet, build_arm_table

_EIGHT_CONN = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class VerdictTolerances:
    tol_a: float
    tol_b: float
    margin_a: float
    margin_b: float
    cluster_min: int
    u_floor: float

    def to_json(self) -> dict:
        return {"tol_a": self.tol_a, "tol_b": self.tol_b,
                "margin_a": self.margin_a, "margin_b": self.margin_b,
                "cluster_min": self.cluster_min, "u_floor": self.u_floor}


def default_tolerances(lam: float, tol_iter: float = 1e-9) -> VerdictTolerances:
    # tol_b and margin_b are operator-scale values at the reference
    # resolution k = 4, h = 0.02; nodes with u below 10*tol_iter cannot
    # support the quotient |grad u|/u and are excluded.
    return VerdictTolerances(tol_a=0.1 * lam, tol_b=0.5,
                             margin_a=0.2 * lam, margin_b=1.0,
                             cluster_min=8, u_floor=10.0 * tol_iter)


@dataclass
class ResidualFields:
    a: np.ndarray          # (ny*nx,) float64, NaN where undefined
    b: np.ndarray          # (ny*nx,) float64, NaN where undefined
    excluded: int          # interior nodes dropped by the u_floor cut


@dataclass
class EigenReport:
    lam: float
    verdict: str                      # "pass" | "fail"
    reasons: list[str]
    max_a: float
    max_a_at: tuple[float, float]
    max_b: float
    max_b_at: tuple[float, float]
    strict_region_nodes: int
    witnesses: dict[str, list[tuple[float, float]]]
    tolerances: VerdictTolerances
    excluded: int

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "max_a": {"value": self.max_a, "at": list(self.max_a_at)},
            "max_b": {"value": self.max_b, "at": list(self.max_b_at)},
            "strict_region_nodes": self.strict_region_nodes,
            "verdict": self.verdict,
            "reasons": self.reasons,
            "witnesses": {k: [list(p) for p in v] for k, v in self.witnesses.items()},
            "tolerances": self.tolerances.to_json(),
            "u_floor_excluded": self.excluded,
        }


def _checked_table(f: Field, stencil: StencilSet, table: ArmTable | None) -> ArmTable:
    if table is None:
        table = build_arm_table(f.grid, stencil)   # datum 0 on clipped arms
    elif table.bval.any():
        raise GridError("eigen residuals require a zero boundary datum")
    return table


def grad_magnitude(f: Field, node: tuple[int, int], stencil: StencilSet,
                   table: ArmTable | None = None) -> float:
    """Steepest-descent slope at one interior node."""
    table = _checked_table(f, stencil, table)
    r = table.row_of[node[1] * f.grid.nx + node[0]]
    if r < 0:
        raise GridError(f"node {node} is not interior")
    out = _kernels.grad_pass(f.values, table.nb, table.arm, table.bval,
                             stencil.offsets, table.rows,
                             np.array([r], dtype=np.int64))
    return float(out[0])


def eigen_residuals(f: Field, lam: float, stencil: StencilSet,
                    table: ArmTable | None = None,
                    u_floor: float = 1e-8) -> ResidualFields:
    """Residual fields a and b on interior nodes with f >= u_floor."""
    if float(f.values.min()) < -1e-12:
        raise GridError("candidate field has negative values beyond -1e-12")
    table = _checked_table(f, stencil, table)
    grid = f.grid
    vals = f.values[table.rows]
    keep = vals >= u_floor
    rows = np.flatnonzero(keep).astype(np.int64)
    excluded = int(np.count_nonzero(~keep))

    a = np.full(grid.n_nodes, np.nan)
    b = np.full(grid.n_nodes, np.nan)
    grad = _kernels.grad_pass(f.values, table.nb, table.arm, table.bval,
                              stencil.offsets, table.rows, rows)
    flat = table.rows[rows]
    a[flat] = lam - grad / f.values[flat]

    off_ridge = rows[grid.cls[table.rows[rows]] != CLS_RIDGE]
    dinf = _kernels.dinf_pass(f.values, table.nb, table.arm, table.bval,
                              stencil.offsets, table.rows, off_ridge)
    b[table.rows[off_ridge]] = dinf
    return ResidualFields(a=a, b=b, excluded=excluded)


def _argmax_info(grid, values: np.ndarray) -> tuple[float, tuple[float, float]]:
    finite = np.isfinite(values)
    if not finite.any():
        return float("nan"), (float("nan"), float("nan"))
    flat = int(np.nanargmax(np.where(finite, values, -np.inf)))
    return float(values[flat]), grid.flat_xy(flat)


def eigen_verdict(f: Field, lam: float, stencil: StencilSet,
                  tolerances: VerdictTolerances | None = None,
                  table: ArmTable | None = None) -> EigenReport:
    """Pass/fail for the eigenfunction equation with witness locations."""
    tol = tolerances if tolerances is not None else default_tolerances(lam)
    res = eigen_residuals(f, lam, stencil, table=table, u_floor=tol.u_floor)
    grid = f.grid
    max_a, at_a = _argmax_info(grid, res.a)
    max_b, at_b = _argmax_info(grid, res.b)

    reasons: list[str] = []
    witnesses: dict[str, list[tuple[float, float]]] = {}
    if max_a > tol.tol_a or max_b > tol.tol_b:
        reasons.append("supersolution-violated")
        pts = []
        if max_a > tol.tol_a:
            pts.append(at_a)
        if max_b > tol.tol_b:
            pts.append(at_b)
        witnesses["supersolution-violated"] = pts

    strict = (np.nan_to_num(res.a, nan=np.inf) < -tol.margin_a) \
        & (np.nan_to_num(res.b, nan=np.inf) < -tol.margin_b)
    strict_nodes = 0
    if strict.any():
        labels, n_lab = ndimage.label(strict.reshape(grid.ny, grid.nx),
                                      structure=_EIGHT_CONN)
        sizes = np.bincount(labels.ravel())[1:]
        big = np.flatnonzero(sizes >= tol.cluster_min) + 1
        if big.size:
            member = np.isin(labels.ravel(), big)
            strict_nodes = int(member.sum())
            reasons.append("strict-supersolution-region")
            sample = np.flatnonzero(member)[:8]
            witnesses["strict-supersolution-region"] = [grid.flat_xy(int(s))
                                                        for s in sample]

    return EigenReport(
        lam=lam, verdict="fail" if reasons else "pass", reasons=reasons,
        max_a=max_a, max_a_at=at_a, max_b=max_b, max_b_at=at_b,
        strict_region_nodes=strict_nodes, witnesses=witnesses,
        tolerances=tol, excluded=res.excluded)


def rayleigh_quotient(f: Field, stencil: StencilSet,
                      table: ArmTable | None = None) -> float:
    """(max steepest-descent slope) / (max value) of a nonnegative field."""
    fmax = float(f.values.max())
    if not fmax > 0:
        raise GridError("rayleigh_quotient needs a nonzero nonnegative field")
    table = _checked_table(f, stencil, table)
    rows = np.arange(table.rows.size, dtype=np.int64)
    grad = _kernels.grad_pass(f.values, table.nb, table.arm, table.bval,
                              stencil.offsets, table.rows, rows)
    return float(grad.max()) / fmax
