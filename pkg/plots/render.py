#!/usr/bin/env python3
"""Static figures from the solver's CSV/JSON outputs.

Reads the files the CLI writes under its --out directory and emits one PNG:

    python3 plots/render.py --kind field    --in RUNDIR --out field.png
    python3 plots/render.py --kind residual --in RUNDIR --out residual.png
    python3 plots/render.py --kind sweep    --in RUNDIR --out sweep.png

* field:    filled contours of the solved field over interior nodes, the
            boundary curve overlaid, ridge nodes marked.
* residual: maps of the two eigen residuals with witness markers from
            report.json.
* sweep:    the bulge parameter against the probe value v(1,0), with the
            reference line at 1 and the zero-bulge point drawn apart.

The scripts consume only the documented file formats; they do not import
the solver package.  Schema violations abort with the offending column
named.  Figures are written without metadata so identical inputs give an
identical byte stream.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIELD_COLUMNS = ["x", "y", "class", "delta", "value"]
RESIDUAL_COLUMNS = ["x", "y", "a", "b"]
SWEEP_COLUMNS = ["eps", "h", "v_at_1_0", "verdict", "max_a", "max_b", "iterations"]


class SchemaError(RuntimeError):
    pass


def load_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    if not path.is_file():
        raise SchemaError(f"missing input file {path}")
    frame = pd.read_csv(path)
    for column in columns:
        if column not in frame.columns:
            raise SchemaError(f"{path.name}: missing column '{column}'")
    return frame


def _to_grid(frame: pd.DataFrame, column: str):
    xs = np.sort(frame["x"].unique())
    ys = np.sort(frame["y"].unique())
    pivot = frame.pivot(index="y", columns="x", values=column)
    pivot = pivot.reindex(index=ys, columns=xs)
    return xs, ys, pivot.to_numpy()


def plot_field(run_dir: Path, out_file: Path) -> None:
    frame = load_csv(run_dir / "field.csv", FIELD_COLUMNS)
    interior = frame[frame["class"] != "exterior"]
    if interior.empty:
        raise SchemaError("field.csv: no interior nodes to plot")
    xs, ys, value = _to_grid(frame, "value")
    _, _, delta = _to_grid(frame, "delta")
    masked = np.ma.masked_where(delta <= 0, value)

    fig, ax = plt.subplots(figsize=(8, 5), dpi=150)
    levels = np.linspace(0.0, max(float(interior["value"].max()), 1e-9), 21)
    cs = ax.contourf(xs, ys, masked, levels=levels, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="value")
    # boundary = edge of the positive-delta region
    ax.contour(xs, ys, (delta > 0).astype(float), levels=[0.5],
               colors="black", linewidths=1.2)
    ridge = frame[frame["class"] == "ridge"]
    if not ridge.empty:
        ax.plot(ridge["x"], ridge["y"], ".", color="crimson", markersize=3,
                label=f"ridge nodes ({len(ridge)})")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(_title_from_report(run_dir, "field"))
    _save(fig, out_file)


def plot_residual(run_dir: Path, out_file: Path) -> None:
    frame = load_csv(run_dir / "residuals.csv", RESIDUAL_COLUMNS)
    if frame.empty:
        raise SchemaError("residuals.csv: no rows")
    witnesses = _witnesses_from_report(run_dir)

    fig, axes = plt.subplots(1, 2, figsize=(12, 5), dpi=150, sharey=True)
    for ax, column in zip(axes, ("a", "b")):
        sub = frame[np.isfinite(frame[column])]
        sc = ax.scatter(sub["x"], sub["y"], c=sub[column], s=4, cmap="coolwarm")
        fig.colorbar(sc, ax=ax, label=column)
        for points in witnesses.values():
            for x, y in points:
                ax.plot(x, y, "o", markersize=9, markerfacecolor="none",
                        markeredgecolor="black", markeredgewidth=1.4)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_title(f"residual {column}")
    axes[0].set_ylabel("y")
    fig.suptitle(_title_from_report(run_dir, "residuals"))
    _save(fig, out_file)


def plot_sweep(run_dir: Path, out_file: Path) -> None:
    frame = load_csv(run_dir / "sweep.csv", SWEEP_COLUMNS)
    if frame.empty:
        raise SchemaError("sweep.csv: no rows")
    fig, ax = plt.subplots(figsize=(7, 5), dpi=150)
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=1.0,
               label="reference value 1")
    for h, group in frame[frame["eps"] > 0].groupby("h"):
        group = group.sort_values("eps")
        ax.plot(group["eps"], group["v_at_1_0"], "o-",
                label=f"h = {h:g}")
    zero = frame[frame["eps"] == 0]
    if not zero.empty:
        ax.plot(zero["eps"], zero["v_at_1_0"], "s", color="black",
                markersize=9, zorder=5, label="zero bulge (ridge segment)")
    ax.set_xlabel("bulge parameter")
    ax.set_ylabel("v(1, 0)")
    ax.set_ylim(0.0, 1.1)
    ax.legend(fontsize=8)
    ax.set_title("probe value against bulge parameter")
    _save(fig, out_file)


def _witnesses_from_report(run_dir: Path) -> dict:
    report = run_dir / "report.json"
    if not report.is_file():
        return {}
    payload = json.loads(report.read_text())
    eigen = payload.get("eigen", {})
    return eigen.get("witnesses", {})


def _title_from_report(run_dir: Path, default: str) -> str:
    report = run_dir / "report.json"
    if not report.is_file():
        return default
    payload = json.loads(report.read_text())
    domain = payload.get("domain", {})
    shape = domain.get("shape", default)
    extra = ""
    if "eps" in domain:
        extra = f", eps = {domain['eps']:g}"
    return f"{shape}{extra}"


def _save(fig, out_file: Path) -> None:
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_file, format="png", metadata={})
    plt.close(fig)


RENDERERS = {"field": plot_field, "residual": plot_residual, "sweep": plot_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", choices=sorted(RENDERERS), required=True)
    parser.add_argument("--in", dest="run_dir", required=True,
                        help="directory holding the solver outputs")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        RENDERERS[args.kind](Path(args.run_dir), Path(args.out))
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
