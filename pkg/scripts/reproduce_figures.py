#!/usr/bin/env python3
"""Regenerate all bundled figure-style experiments as CSV files.

Analytic curves by default; pass --engine both to add Monte Carlo rows at
the same operating points (slower). Output lands in one file per preset,
plot-ready with one metric per column.

  python3 scripts/reproduce_figures.py --outdir results
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from ehshare.cli_sweep import (METRIC_COLUMNS, PARAM_FIELDS, preset_specs,
                               sweep, write_rows)
from ehshare.simulator import SimConfig

PRESETS = ("fig2", "fig3", "fig4", "fig5")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--engine", choices=("analytic", "both"), default="analytic")
    parser.add_argument("--slots", type=int, default=1_000_000)
    parser.add_argument("--warmup", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    sim = None
    if args.engine == "both":
        sim = SimConfig(n_slots=args.slots, seed=args.seed, warmup=args.warmup)

    for name in PRESETS:
        rows = []
        for spec in preset_specs(name, engines=args.engine, sim=sim):
            rows.extend(sweep(spec, jobs=args.jobs))
        path = os.path.join(args.outdir, f"{name}.csv")
        write_rows(rows, PARAM_FIELDS + METRIC_COLUMNS, path, "csv")
        bad = sum(1 for r in rows if r["error"])
        print(f"{name}: {len(rows)} rows -> {path}" + (f" ({bad} failed points)" if bad else ""))


if __name__ == "__main__":
    main()
