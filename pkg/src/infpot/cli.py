"""Command-line driver for reproducible experiments.

Subcommands wire geometry -> grid -> solver -> eigen into file-emitting
runs under ``--out``:

* ``potential``    solve the infinity-harmonic potential; field.csv, report.json
* ``eigencheck``   residuals and verdict for a candidate; residuals.csv, report.json
* ``sweep``        eps x h table of potential runs; sweep.csv, report.json
* ``convergence``  refinement study with Richardson extrapolation; convergence.csv

Exit codes: 0 success, 2 validation error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .eigen import default_tolerances, eigen_residuals, eigen_verdict
from .geometry import (Ball, GeometryError, Point2, SEps, Square, Stadium,
                       build_domain, domain_json, lambda_value)
from .grid import CLS_RIDGE, Field, GridError, delta_field, dump_field_csv
from .reports import fmt_float, write_csv, write_json
from .solver import SolverNonConvergence, operator_on_function, potential
from . import __version__

PROBE_DEFAULT = (1.0, 0.0)


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok != ""]


def _build_spec(args) -> object:
    if args.domain == "ball":
        return Ball(Point2(0.0, 0.0), args.radius)
    if args.domain == "stadium":
        return Stadium((Point2(-1.0, 0.0), Point2(1.0, 0.0)), args.radius)
    if args.domain == "square":
        return Square(Point2(0.0, 0.0), args.half_side)
    if args.domain == "s_eps":
        if args.eps is None:
            raise GeometryError("--eps is required for --domain s_eps")
        return SEps(args.eps)
    raise GeometryError(f"unknown domain {args.domain!r}")


def _config_json(args, extra: dict | None = None) -> dict:
    cfg = {
        "command": args.command,
        "domain": args.domain,
        "h": getattr(args, "h", None),
        "k": args.k,
        "tol": args.tol,
        "seed": args.seed,
    }
    if args.domain == "s_eps" and getattr(args, "eps", None) is not None:
        cfg["eps"] = args.eps
    if extra:
        cfg.update(extra)
    return cfg


def _probe_value(field: Field, x: float, y: float) -> dict:
    flat = field.grid.nearest_interior_flat(x, y)
    px, py = field.grid.flat_xy(flat)
    return {"requested": [x, y], "node": [px, py],
            "value": float(field.values[flat])}


def _check_node_budget(domain, h: float) -> None:
    lo, hi = domain.bbox
    n = ((hi.x - lo.x) / h + 3) * ((hi.y - lo.y) / h + 3)
    if n > 1e6:
        raise GridError(
            f"grid would have about {int(n)} nodes (> 1e6); increase --h")


def run_potential(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    domain = build_domain(_build_spec(args))
    _check_node_budget(domain, args.h)
    fld, report, grid, stencil = potential(domain, args.h, args.k, args.tol,
                                           max_sweeps=args.max_sweeps,
                                           sweep_mode=args.sweep_mode)
    dump_field_csv(fld, out / "field.csv")
    payload = {
        "config": _config_json(args),
        "domain": domain_json(domain),
        "grid": {"h": grid.h, "k": stencil.k, "nx": grid.nx, "ny": grid.ny,
                 "interior_nodes": grid.n_interior,
                 "ridge_nodes": int((grid.cls == CLS_RIDGE).sum())},
        "solve": report.to_json(timing=args.timing),
    }
    if args.probe is not None:
        probe = _probe_value(fld, *args.probe)
    elif args.domain in ("s_eps", "stadium"):
        probe = _probe_value(fld, *PROBE_DEFAULT)
    else:
        probe = None
    if probe is not None:
        payload["probe"] = probe
        print(f"v({fmt_float(probe['requested'][0])},"
              f"{fmt_float(probe['requested'][1])}) = {fmt_float(probe['value'])}")
    write_json(out / "report.json", payload)
    return 0


def _candidate_field(args, domain, grid_stencil=None):
    """Returns (field, solve_report_or_None, grid, stencil)."""
    if args.candidate == "potential":
        fld, report, grid, stencil = potential(domain, args.h, args.k, args.tol,
                                               max_sweeps=args.max_sweeps,
                                               sweep_mode=args.sweep_mode)
        return fld, report, grid, stencil
    from .grid import build_grid
    grid, stencil = build_grid(domain, args.h, args.k)
    return delta_field(grid), None, grid, stencil


def run_eigencheck(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    domain = build_domain(_build_spec(args))
    _check_node_budget(domain, args.h)
    fld, solve_report, grid, stencil = _candidate_field(args, domain)
    lam = lambda_value(domain)
    tol = default_tolerances(lam, tol_iter=args.tol)
    report = eigen_verdict(fld, lam, stencil, tolerances=tol)
    res = eigen_residuals(fld, lam, stencil, u_floor=tol.u_floor)

    rows = []
    for flat in grid.interior_flat:
        a = res.a[flat]
        if np.isnan(a):
            continue
        x, y = grid.flat_xy(int(flat))
        rows.append((x, y, a, res.b[flat]))
    write_csv(out / "residuals.csv", ["x", "y", "a", "b"], rows)

    payload = {
        "config": _config_json(args, {"candidate": args.candidate}),
        "domain": domain_json(domain),
        "grid": {"h": grid.h, "k": stencil.k, "nx": grid.nx, "ny": grid.ny},
        "eigen": report.to_json(),
    }
    if solve_report is not None:
        payload["solve"] = solve_report.to_json(timing=args.timing)
    write_json(out / "report.json", payload)
    print(f"verdict: {report.verdict}"
          + (f" ({', '.join(report.reasons)})" if report.reasons else ""))
    return 0


def run_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps_list = args.eps_list
    h_list = args.h_list
    if any(e < 0 for e in eps_list):
        raise GeometryError("sweep eps values must be nonnegative")
    rows = []
    row_reports = []
    for eps in eps_list:
        for h in h_list:
            try:
                domain = build_domain(SEps(eps))
                _check_node_budget(domain, h)
                fld, rep, grid, stencil = potential(domain, h, args.k, args.tol,
                                                    max_sweeps=args.max_sweeps,
                                                    sweep_mode=args.sweep_mode)
                lam = lambda_value(domain)
                verdict = eigen_verdict(fld, lam, stencil,
                                        tolerances=default_tolerances(lam, args.tol))
                probe = _probe_value(fld, *PROBE_DEFAULT)
                rows.append((eps, h, probe["value"], verdict.verdict,
                             verdict.max_a, verdict.max_b, rep.iterations))
                row_reports.append({
                    "eps": eps, "h": h, "v_at_1_0": probe["value"],
                    "verdict": verdict.verdict, "reasons": verdict.reasons,
                    "max_a": verdict.max_a, "max_b": verdict.max_b,
                    "iterations": rep.iterations,
                })
            except (GeometryError, GridError, SolverNonConvergence) as exc:
                rows.append((eps, h, float("nan"), "error",
                             float("nan"), float("nan"), 0))
                row_reports.append({"eps": eps, "h": h, "error": str(exc)})
    write_csv(out / "sweep.csv",
              ["eps", "h", "v_at_1_0", "verdict", "max_a", "max_b", "iterations"],
              rows)
    gaps = [1.0 - r["v_at_1_0"] for r in row_reports
            if "error" not in r and r["eps"] > 0]
    payload = {
        "config": _config_json(args, {"eps_list": eps_list, "h_list": h_list}),
        "rows": row_reports,
        "gap_min_over_positive_eps": min(gaps) if gaps else None,
    }
    write_json(out / "report.json", payload)
    for r in rows:
        print(f"eps={fmt_float(r[0])} h={fmt_float(r[1])} "
              f"v(1,0)={fmt_float(r[2])} verdict={r[3]}")
    return 0


def richardson(hs: list[float], values: list[float]) -> dict:
    """Extrapolated limit and empirical order from the last three values.

    Assumes a near-geometric spacing sequence; falls back to the finest
    value when the differences do not behave monotonically.
    """
    if len(values) < 3:
        return {"limit": values[-1], "order": None}
    v1, v2, v3 = values[-3], values[-2], values[-1]
    h1, h2, h3 = hs[-3], hs[-2], hs[-1]
    ratio = h1 / h2
    d12, d23 = v1 - v2, v2 - v3
    if abs(h2 / h3 - ratio) > 0.05 * ratio or d23 == 0.0 or d12 * d23 <= 0.0:
        return {"limit": v3, "order": None}
    order = float(np.log(abs(d12 / d23)) / np.log(ratio))
    # v(h) = L + C h^p  =>  C h3^p = d23 / (ratio^p - 1)
    limit = v3 - d23 / (ratio ** order - 1.0)
    return {"limit": float(limit), "order": order}


def run_convergence(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h_list = args.h_list
    if any(h2 >= h1 for h1, h2 in zip(h_list, h_list[1:])):
        raise GridError("--h-list must be strictly decreasing")

    if args.study == "aronsson":
        # x^(4/3) - y^(4/3) solves the infinity-Laplace equation away from
        # the axes, so the operator values are pure discretization error.
        fn = lambda x, y: np.cbrt(x) * x - np.cbrt(y) * y
        rows = [(h, operator_on_function(fn, (1.0, 2.0, 1.0, 2.0), h, args.k))
                for h in h_list]
        write_csv(out / "convergence.csv", ["h", "max_dinf"], rows)
        payload = {
            "config": _config_json(args, {"study": args.study, "h_list": h_list}),
            "rows": [{"h": h, "max_dinf": v} for h, v in rows],
        }
        write_json(out / "report.json", payload)
        for h, v in rows:
            print(f"h={fmt_float(h)} max|D|={fmt_float(v)}")
        return 0

    domain = build_domain(_build_spec(args))
    probe_xy = args.probe if args.probe is not None else PROBE_DEFAULT
    rows = []
    probes = []
    for h in h_list:
        _check_node_budget(domain, h)
        fld, rep, grid, stencil = potential(domain, h, args.k, args.tol,
                                            max_sweeps=args.max_sweeps,
                                            sweep_mode=args.sweep_mode)
        probe = _probe_value(fld, *probe_xy)
        sup_err = _closed_form_sup_error(args.domain, getattr(args, "eps", None),
                                         fld, grid)
        rows.append((h, probe["value"],
                     sup_err if sup_err is not None else float("nan"),
                     rep.residual_max, rep.iterations))
        probes.append(probe["value"])
    write_csv(out / "convergence.csv",
              ["h", "probe_value", "sup_err", "residual_max", "iterations"], rows)
    extrap = richardson(h_list, probes)
    payload = {
        "config": _config_json(args, {"study": args.study, "h_list": h_list,
                                      "probe": list(probe_xy)}),
        "domain": domain_json(domain),
        "rows": [{"h": r[0], "probe_value": r[1], "sup_err": r[2],
                  "residual_max": r[3], "iterations": r[4]} for r in rows],
        "richardson": extrap,
    }
    write_json(out / "report.json", payload)
    for r in rows:
        print(f"h={fmt_float(r[0])} probe={fmt_float(r[1])} "
              f"sup_err={fmt_float(r[2])}")
    order = extrap["order"]
    print(f"richardson limit={fmt_float(extrap['limit'])} "
          f"order={'n/a' if order is None else fmt_float(order)}")
    return 0


def _closed_form_sup_error(domain_name: str, eps: float | None,
                           fld: Field, grid) -> float | None:
    """Sup error against the known potential where one exists."""
    mask = grid.cls >= 1
    xs, ys = grid.node_coords()
    if domain_name == "ball":
        exact = 1.0 - np.hypot(xs[mask], ys[mask])
    elif domain_name == "stadium" or (domain_name == "s_eps" and eps == 0.0):
        exact = grid.delta[mask]
    else:
        return None
    return float(np.abs(fld.values[mask] - exact).max())


def _add_common(p: argparse.ArgumentParser, needs_h: bool = True) -> None:
    p.add_argument("--domain", choices=["ball", "stadium", "square", "s_eps"],
                   required=True)
    p.add_argument("--eps", type=float, default=None,
                   help="bulge parameter of the s_eps domain")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--half-side", dest="half_side", type=float, default=1.0)
    if needs_h:
        p.add_argument("--h", type=float, default=0.02, help="grid spacing")
    p.add_argument("--k", type=int, default=4, help="stencil radius in cells")
    p.add_argument("--tol", type=float, default=1e-9, help="sweep tolerance")
    p.add_argument("--probe", type=_parse_probe, default=None,
                   help="probe point X,Y")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=None)
    p.add_argument("--sweep-mode", dest="sweep_mode",
                   choices=["gs", "redblack"], default="gs")
    p.add_argument("--timing", action="store_true",
                   help="include wall time in report.json (non-deterministic)")


def _parse_probe(text: str) -> tuple[float, float]:
    parts = _parse_floats(text)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("probe must be X,Y")
    return (parts[0], parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infpot",
        description="Infinity-harmonic potentials and eigenfunction checks "
                    "on planar convex domains.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", help="solve the infinity-harmonic potential")
    _add_common(p)

    p = sub.add_parser("eigencheck", help="check a candidate eigenfunction")
    _add_common(p)
    p.add_argument("--candidate", choices=["delta", "potential"], required=True)

    p = sub.add_parser("sweep", help="eps x h sweep of s_eps potentials")
    p.add_argument("--eps", dest="eps_list", type=_parse_floats, required=True,
                   help="comma-separated eps values")
    p.add_argument("--h", dest="h_list", type=_parse_floats, required=True,
                   help="comma-separated spacings")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=None)
    p.add_argument("--sweep-mode", dest="sweep_mode",
                   choices=["gs", "redblack"], default="gs")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(domain="s_eps")

    p = sub.add_parser("convergence", help="refinement study")
    p.add_argument("--study", choices=["potential", "aronsson"],
                   default="potential")
    p.add_argument("--domain", choices=["ball", "stadium", "square", "s_eps"],
                   default="ball")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--half-side", dest="half_side", type=float, default=1.0)
    p.add_argument("--h", dest="h_list", type=_parse_floats, required=True,
                   help="comma-separated, strictly decreasing spacings")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--probe", type=_parse_probe, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=None)
    p.add_argument("--sweep-mode", dest="sweep_mode",
                   choices=["gs", "redblack"], default="gs")
    p.add_argument("--timing", action="store_true")
    return parser


_RUNNERS = {
    "potential": run_potential,
    "eigencheck": run_eigencheck,
    "sweep": run_sweep,
    "convergence": run_convergence,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _RUNNERS[args.command](args)
    except (GeometryError, GridError) as exc:
        print('{"error": "validation", "message": %s}'
              % _json_str(str(exc)), file=sys.stdout)
        return 2
    except SolverNonConvergence as exc:
        rep = exc.report
        print('{"error": "non_convergence", "message": %s, '
              '"iterations": %d, "final_update": %s}'
              % (_json_str(str(exc)), rep.iterations, fmt_float(rep.final_update)),
              file=sys.stdout)
        return 3


def _json_str(s: str) -> str:
    import json
    return json.dumps(s)


def console_main() -> None:
    sys.exit(main())
