#!/usr/bin/env python
"""
Write the CSV tables behind the inertia/damping figures into one directory.

SMIB root locus and Bode curves, norm-vs-M and norm-vs-D sweeps for the phase
and frequency outputs, and the combined-output trade-off for several kappas.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from swingbench.cli import BODE_COLUMNS, COMBINED_COLUMNS, ROOT_LOCUS_COLUMNS, SWEEP_COLUMNS
from swingbench.network import NetworkSpec
from swingbench.oracles import bode_table
from swingbench.report import write_csv
from swingbench.schema import parse_network
from swingbench.sweeps import (
    Grid,
    SweepParameter,
    SweepPlan,
    combined_sweep,
    figure_shape_suite,
    norm_sweep,
    root_locus,
)
from swingbench.system import OutputKind


def parse_args():
    parser = argparse.ArgumentParser(description="Reproduce the figure data tables as CSV.")
    parser.add_argument("--out_dir", default="figures")
    parser.add_argument("--net", default="complete:5", help="Network file or preset string for the sweeps.")
    parser.add_argument("--inertia", type=float, default=1.0)
    parser.add_argument("--damping", type=float, default=1.0)
    parser.add_argument("--points", type=int, default=200)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--kappas", default="0.1,1,10", help="Comma-separated kappa values for the combined output.")
    return parser.parse_args()


def sweep_rows(table):
    return [
        (
            table.parameter.value,
            row.value,
            row.h2_closed,
            row.h2_oracle,
            row.hinf_closed,
            row.hinf_oracle,
            row.regime,
            row.zeta_min,
            row.oracle_row,
        )
        for row in table.rows
    ]


def write_sweep(out_dir: Path, name: str, plan: SweepPlan, threads: int) -> None:
    table = norm_sweep(plan, threads=threads)
    path = write_csv(out_dir / f"{name}.csv", SWEEP_COLUMNS, sweep_rows(table))
    failed = [f"{v.column} {v.property.value}" for v in figure_shape_suite(plan, table) if not v.passed]
    status = "ok" if not failed else "FAILED: " + "; ".join(failed)
    print(f"{path} ({len(table.rows)} rows, shape checks {status})")


def main():
    args = parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Single machine against an infinite bus, D = B = 1.
    locus = root_locus(Grid(0.01, 100.0, args.points).values(), 1.0, susceptance=1.0)
    path = write_csv(
        out_dir / "smib_root_locus.csv",
        ROOT_LOCUS_COLUMNS,
        [(r.inertia, r.mode, r.re1, r.im1, r.re2, r.im2) for r in locus],
    )
    print(path)
    for inertia in (1.0, 100.0):
        rows = bode_table(NetworkSpec.smib(inertia, 1.0, 1.0), OutputKind.PHASE, 0.01, 10.0, args.points)
        path = write_csv(
            out_dir / f"smib_bode_M{inertia:g}.csv", BODE_COLUMNS, [(r.omega, r.sigma_max) for r in rows]
        )
        print(f"{path} (peak {max(r.sigma_max for r in rows):.6g})")
    smib_plan = SweepPlan(
        spec=NetworkSpec.smib(1.0, 1.0, 1.0),
        parameter=SweepParameter.INERTIA,
        grid=Grid(0.01, 100.0, args.points),
        output=OutputKind.PHASE,
    )
    write_sweep(out_dir, "smib_norms_vs_M", smib_plan, args.threads)

    # Network sweeps.
    spec = parse_network(args.net, inertia=args.inertia, damping=args.damping)
    for output in (OutputKind.PHASE, OutputKind.FREQUENCY):
        for parameter, grid in (
            (SweepParameter.INERTIA, Grid(0.01, 100.0, args.points)),
            (SweepParameter.DAMPING, Grid(0.01, 100.0, args.points)),
        ):
            plan = SweepPlan(spec=spec, parameter=parameter, grid=grid, output=output)
            write_sweep(out_dir, f"{output.value}_vs_{parameter.value}", plan, args.threads)

    for kappa in (float(k) for k in args.kappas.split(",")):
        table = combined_sweep(spec, kappa, Grid(0.1, 10.0, args.points), threads=args.threads)
        path = write_csv(
            out_dir / f"combined_kappa{kappa:g}.csv",
            COMBINED_COLUMNS,
            [(row.value, row.h2_oracle, row.hinf_oracle) for row in table.rows],
        )
        print(path)


if __name__ == "__main__":
    main()
