"""Acceptance criteria, one test per criterion.

Each test prints a single pass/fail line (visible with ``pytest -v`` through
the test outcome, and on stdout with ``-s``).  Tolerances are pinned here;
nothing is deferred to later calibration.  The eps x h sweep criterion is
the heavy one (twelve potential solves down to h = 0.01).
"""

import math

import numpy as np
import pytest

from infpot import (Ball, Point2, SEps, Square, Stadium, build_domain,
                    default_tolerances, delta_field, discrete_inf_laplacian,
                    eigen_residuals, eigen_verdict, lambda_value,
                    operator_on_function, potential, rayleigh_quotient)
from infpot.cli import main, richardson
from infpot.grid import Field, build_grid
from infpot.solver import BVProblem, solve_dirichlet

_SOLVES: dict = {}


def solved_potential(eps: float, h: float, k: int = 4):
    key = (eps, h, k)
    if key not in _SOLVES:
        _SOLVES[key] = potential(build_domain(SEps(eps)), h, k)
    return _SOLVES[key]


def report_line(name: str, ok: bool):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


# ---------------------------------------------------------------------------

def test_criterion_ball_potential():
    """Ball h=0.02 k=4: sup |v - (1-|x|)| <= 4h against the radial cone."""
    fld, rep, grid, _ = potential(build_domain(Ball(Point2(0, 0), 1.0)), 0.02, 4)
    xs, ys = grid.node_coords()
    mask = grid.cls >= 1
    err = float(np.abs(fld.values[mask] - (1.0 - np.hypot(xs[mask], ys[mask]))).max())
    probe = float(fld.values[grid.nearest_interior_flat(0.5, 0.0)])
    assert abs(probe - 0.5) <= 0.06, f"probe v(0.5,0) = {probe}"
    report_line(f"ball-potential sup-err {err:.4f} <= {4 * 0.02}", err <= 4 * 0.02)


def test_criterion_stadium_positive():
    """SEps{0} h=0.02 k=4: v tracks delta; delta and v both pass the check."""
    fld, rep, grid, stencil = solved_potential(0.0, 0.02)
    mask = grid.cls >= 1
    err = float(np.abs(fld.values[mask] - grid.delta[mask]).max())
    ok = err <= 4 * 0.02
    v_delta = eigen_verdict(delta_field(grid), 1.0, stencil)
    v_pot = eigen_verdict(fld, 1.0, stencil)
    ok = ok and v_delta.verdict == "pass" and v_pot.verdict == "pass"
    report_line(f"stadium-positive sup-err {err:.4f}, delta {v_delta.verdict}, "
                f"potential {v_pot.verdict}", ok)


def test_criterion_square_negative():
    """Square delta fails with diagonal strict-region witnesses; kink value."""
    domain = build_domain(Square(Point2(0, 0), 1.0))
    grid, stencil = build_grid(domain, 0.02, 4)
    report = eigen_verdict(delta_field(grid), 1.0, stencil)
    ok = report.verdict == "fail" and \
        "strict-supersolution-region" in report.reasons
    witnesses = report.witnesses.get("strict-supersolution-region", [])
    ok = ok and len(witnesses) > 0
    for x, y in witnesses:
        ok = ok and abs(abs(x) - abs(y)) <= stencil.radius + 2 * grid.h

    # operator value at the kink, stencil radius r = k*h = 0.2
    gridb, stencilb = build_grid(domain, 0.02, 10)
    b = discrete_inf_laplacian(delta_field(gridb),
                               gridb.nearest_node(0.5, 0.5), stencilb)
    oracle = (1.0 / math.sqrt(2.0) - 1.0) / 0.2
    ok = ok and b < 0 and abs(b / oracle - 1.0) <= 0.15
    report_line(f"square-negative verdict {report.verdict}, "
                f"b(0.5,0.5)={b:.4f} vs {oracle:.4f}", ok)


def test_criterion_counterexample_gap():
    """eps x h sweep: every positive-eps run fails the eigen check, the
    probe stays well under 1 with a Richardson gap >= 0.05, and the probe is
    h-stable between h=0.02 and h=0.01 before the numbers are trusted."""
    eps_list = [0.0, 0.05, 0.1, 0.25]
    h_list = [0.04, 0.02, 0.01]
    values: dict = {}
    for eps in eps_list:
        domain = build_domain(SEps(eps))
        lam = lambda_value(domain)
        for h in h_list:
            fld, rep, grid, stencil = solved_potential(eps, h)
            verdict = eigen_verdict(fld, lam, stencil,
                                    tolerances=default_tolerances(lam))
            v10 = float(fld.values[grid.nearest_interior_flat(1.0, 0.0)])
            values[(eps, h)] = v10
            if eps == 0.0:
                assert v10 == 1.0, f"eps=0 h={h}: probe {v10!r} not exactly 1"
            else:
                assert verdict.verdict == "fail", \
                    f"eps={eps} h={h}: expected fail, got {verdict.verdict}"
                assert v10 <= 0.95, f"eps={eps} h={h}: probe {v10} > 0.95"
    gaps = []
    for eps in eps_list[1:]:
        seq = [values[(eps, h)] for h in h_list]
        extrap = richardson(h_list, seq)
        gap = 1.0 - extrap["limit"]
        gaps.append(gap)
        assert gap >= 0.05, f"eps={eps}: extrapolated gap {gap:.4f} < 0.05"
        drift = abs(values[(eps, 0.02)] - values[(eps, 0.01)])
        assert drift <= 0.01, f"eps={eps}: probe drift {drift:.4f} over h-halving"
    report_line("counterexample-gap verdicts/probe/gaps "
                + ",".join(f"{g:.3f}" for g in gaps), True)


def test_criterion_operator_consistency():
    """Halving the spacing along the fixed k*h path drops the Aronsson
    residual by >= 1.3x; linear fields are in the kernel to 1e-12."""
    aronsson = lambda x, y: np.cbrt(x) * x - np.cbrt(y) * y
    ok = True
    ratios = []
    for r in (0.4, 0.2):
        coarse = operator_on_function(aronsson, (1, 2, 1, 2), r / 4, 4)
        fine = operator_on_function(aronsson, (1, 2, 1, 2), r / 8, 8)
        ratios.append(coarse / fine)
        ok = ok and coarse / fine >= 1.3
    lin = operator_on_function(lambda x, y: 2 * x + 3 * y, (1, 2, 1, 2), 0.05, 4)
    ok = ok and lin <= 1e-12
    report_line("operator-consistency ratios "
                + ",".join(f"{q:.2f}" for q in ratios) + f", linear {lin:.1e}", ok)


def test_criterion_structural_suite():
    """Comparison principle, exact max principle, Rayleigh lower bound,
    exact scale invariance, 1-Lipschitz delta vs the sampling oracle."""
    ok = True

    # discrete comparison principle on 20 random monotone data pairs
    domain = build_domain(Ball(Point2(0, 0), 1.0))
    grid, stencil = build_grid(domain, 0.1, 3)
    rng = np.random.default_rng(2024)
    center = grid.nearest_interior_flat(0.0, 0.0)
    for _ in range(20):
        a, b, c = rng.uniform(-0.3, 0.3, 3)
        bump = rng.uniform(0.0, 0.4)
        g1 = lambda x, y: a * x + b * y + c * np.cos(2 * x * y)
        f1 = rng.uniform(0.4, 0.8)
        p1 = BVProblem.build(grid, stencil, g=g1, fixed={center: f1})
        p2 = BVProblem.build(grid, stencil,
                             g=lambda x, y: g1(x, y) + bump,
                             fixed={center: f1 + rng.uniform(0.0, 0.3)})
        u1, _ = solve_dirichlet(p1, tol_iter=1e-10)
        u2, _ = solve_dirichlet(p2, tol_iter=1e-10)
        ok = ok and bool((u1.values <= u2.values + 1e-9).all())

    # exact max principle
    gfun = lambda x, y: 0.5 * np.sin(4 * x) + 0.2 * y
    prob = BVProblem.build(grid, stencil, g=gfun)
    fld, _ = solve_dirichlet(prob, tol_iter=1e-10)
    clipped = prob.table.nb < 0
    lo = min(0.0, float(prob.table.bval[clipped].min()))
    hi = max(0.0, float(prob.table.bval[clipped].max()))
    mask = grid.cls >= 1
    ok = ok and fld.values[mask].min() >= lo and fld.values[mask].max() <= hi

    # Rayleigh lower bound on 20 random admissible fields at h=0.02, k=4
    grid2, stencil2 = build_grid(domain, 0.02, 4)
    lam = 1.0
    xs, ys = grid2.node_coords()
    m2 = grid2.cls >= 1
    for _ in range(20):
        p = rng.uniform(0.5, 2.0)
        amp, fx, fy = rng.uniform(0.5, 2.0), rng.uniform(-3, 3), rng.uniform(-3, 3)
        vals = np.zeros(grid2.n_nodes)
        vals[m2] = (grid2.delta[m2] ** p) * (amp + 0.4 * np.sin(fx * xs[m2])
                                             * np.cos(fy * ys[m2]))
        vals = np.maximum(vals, 0.0)
        q = rayleigh_quotient(Field(grid2, vals), stencil2)
        ok = ok and q >= lam - 0.15 * lam

    # exact scale invariance under f -> 2f
    fld_d = delta_field(grid2)
    r1 = eigen_residuals(fld_d, lam, stencil2)
    r2 = eigen_residuals(fld_d.scaled(2.0), lam, stencil2)
    fin = np.isfinite(r1.a)
    ok = ok and bool((r1.a[fin] == r2.a[fin]).all())
    ok = ok and eigen_verdict(fld_d, lam, stencil2).verdict \
        == eigen_verdict(fld_d.scaled(2.0), lam, stencil2).verdict

    # geometry: 1-Lipschitz and exact-vs-sampled delta
    for spec in (Ball(Point2(0, 0), 1.0), SEps(0.1)):
        dom = build_domain(spec)
        lo_, hi_ = dom.bbox
        pts = []
        while len(pts) < 1000:
            x = rng.uniform(lo_.x, hi_.x)
            y = rng.uniform(lo_.y, hi_.y)
            if dom.signed_distance(Point2(x, y)) < -1e-9:
                pts.append((x, y))
        pts = np.array(pts)
        d = dom.delta_many(pts[:, 0], pts[:, 1])
        gaps = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        ok = ok and bool((np.abs(np.diff(d)) <= gaps + 1e-12).all())
        from infpot.geometry import boundary_samples
        bx, by = boundary_samples(dom, 100_000)
        spacing = max(p.length for p in dom.pieces) / 100_000
        for x, y in pts[:50]:
            sampled = float(np.hypot(bx - x, by - y).min())
            ok = ok and abs(dom.delta(Point2(x, y)) - sampled) <= 2 * spacing

    report_line("structural-suite", ok)


def test_criterion_determinism(tmp_path):
    """Identical configurations produce byte-identical reports and CSVs."""
    ok = True
    base = ["--domain", "s_eps", "--eps", "0.1", "--h", "0.05", "--out"]
    main(["potential", *base, str(tmp_path / "p1")])
    main(["potential", *base, str(tmp_path / "p2")])
    for name in ("report.json", "field.csv"):
        ok = ok and (tmp_path / "p1" / name).read_bytes() \
            == (tmp_path / "p2" / name).read_bytes()
    main(["eigencheck", "--candidate", "potential", *base, str(tmp_path / "e1")])
    main(["eigencheck", "--candidate", "potential", *base, str(tmp_path / "e2")])
    for name in ("report.json", "residuals.csv"):
        ok = ok and (tmp_path / "e1" / name).read_bytes() \
            == (tmp_path / "e2" / name).read_bytes()
    main(["sweep", "--eps", "0,0.1", "--h", "0.08", "--out", str(tmp_path / "s1")])
    main(["sweep", "--eps", "0,0.1", "--h", "0.08", "--out", str(tmp_path / "s2")])
    ok = ok and (tmp_path / "s1" / "sweep.csv").read_bytes() \
        == (tmp_path / "s2" / "sweep.csv").read_bytes()
    report_line("determinism", ok)
