"""Command-line front end: single-point reports, simulator runs, parameter
sweeps, analytic-vs-simulated comparisons, and the bundled figure presets.

Output is plot-ready data (CSV with one metric per column, or JSON);
rendering is left to external tooling. Rows are emitted in grid order and
are deterministic for a fixed sweep spec and seed.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import energy_chain, harvest, primary_link
from .config import (ParameterError, SystemParams, dbm_to_watts, default_params,
                     derive, load_params, validate)
from .simulator import SimConfig, run as run_simulation

PARAM_FIELDS = [f.name for f in fields(SystemParams)]
METRIC_COLUMNS = ["engine", "mu_p", "pi_idle", "pu_throughput", "regime", "g",
                  "mu_s", "mu_e", "success_prob", "seed", "slots", "warmup", "error"]
COMPARE_METRICS = ["g", "a_mu_s", "s_mu_s", "d_mu_s_abs", "d_mu_s_rel",
                   "a_pi_idle", "s_pi_idle", "d_pi_idle_abs", "d_pi_idle_rel",
                   "a_pu_throughput", "s_pu_throughput", "d_pu_throughput_abs",
                   "d_pu_throughput_rel", "tv_occupancy", "seed", "slots", "error"]


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter over a strictly monotone grid.

    engines: 'analytic', 'simulate', or 'both'. g_policy 'optimize' picks
    the throughput-maximizing energy budget per point (the simulator then
    reuses it when both engines run); 'fixed' keeps the configured G.
    outputs optionally restricts the metric columns.
    """

    swept_param: str
    grid: tuple
    fixed: SystemParams
    outputs: tuple = ()
    engines: str = "analytic"
    sim: SimConfig | None = None
    g_policy: str = "optimize"
    epsilon: float = harvest.DEFAULT_TAIL_EPS

    def check(self):
        if self.swept_param not in PARAM_FIELDS:
            raise ParameterError([f"swept_param: {self.swept_param!r} is not a parameter field"])
        if len(self.grid) == 0:
            raise ParameterError(["grid: must be nonempty"])
        diffs = np.diff(np.asarray(self.grid, dtype=float))
        if len(self.grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ParameterError(["grid: must be strictly monotone"])
        if self.engines not in ("analytic", "simulate", "both"):
            raise ParameterError([f"engines: unknown engine {self.engines!r}"])
        if self.g_policy not in ("optimize", "fixed"):
            raise ParameterError([f"g_policy: unknown policy {self.g_policy!r}"])
        if self.engines in ("simulate", "both") and self.sim is None:
            raise ParameterError(["sim: simulate engine requires a SimConfig"])
        return self


def _point_params(spec: SweepSpec, value) -> SystemParams:
    if spec.swept_param in ("E_max", "G"):
        i = int(round(float(value)))
        if abs(float(value) - i) > 1e-9:
            raise ParameterError([f"{spec.swept_param}: grid value {value} is not an integer"])
        value = i
    else:
        value = float(value)
    return validate(replace(spec.fixed, **{spec.swept_param: value}))


def _analytic_point(params: SystemParams, epsilon, g_policy):
    """Returns (report, chain at the reported g). Chain carries chi."""
    dc = derive(params)
    pmfs = harvest.arrival_pmfs(params, dc, epsilon)
    pi = primary_link.pi_idle(params, dc)
    if g_policy == "optimize":
        report = energy_chain.optimize_g(params, dc, pmfs)
        g_used = report.g_star
    else:
        g_used = params.G
        chain = energy_chain.solve_chain(pmfs[0], pmfs[1], pi, g_used, params.E_max)
        mu_s = energy_chain.su_throughput(chain, params, dc)
        report = energy_chain.ThroughputReport(
            pi_idle=pi,
            mu_p=primary_link.mu_p(params, dc),
            pu_throughput=primary_link.pu_throughput(params, dc),
            mu_e=energy_chain.mu_e(chain, params, dc),
            mu_s_by_g={g_used: mu_s},
            g_star=g_used,
            mu_s_star=mu_s,
        )
        return report, chain, dc
    chain = energy_chain.solve_chain(pmfs[0], pmfs[1], pi, g_used, params.E_max)
    return report, chain, dc


def _param_columns(params: SystemParams) -> dict:
    return {name: getattr(params, name) for name in PARAM_FIELDS}


def _analytic_row(params, report, dc):
    row = _param_columns(params)
    row.update(
        engine="analytic",
        mu_p=report.mu_p,
        pi_idle=report.pi_idle,
        pu_throughput=report.pu_throughput,
        regime=primary_link.regime(params, dc),
        g=report.g_star,
        mu_s=report.mu_s_star,
        mu_e=report.mu_e,
        success_prob=energy_chain.success_probability(params, dc, report.g_star),
        seed="",
        slots="",
        warmup="",
        error="",
    )
    return row


def _simulate_row(params, result):
    row = _param_columns(params)
    row.update(
        engine="simulate",
        mu_p="",
        pi_idle=result.pi_idle_hat,
        pu_throughput=result.pu_throughput_hat,
        regime="",
        g=result.g,
        mu_s=result.su_throughput_hat,
        mu_e=result.energy_consumed_per_slot,
        success_prob="",
        seed=result.seed,
        slots=result.n_slots,
        warmup=result.warmup,
        error="",
    )
    return row


def _error_row(params, engine, exc):
    row = _param_columns(params) if params is not None else {k: "" for k in PARAM_FIELDS}
    row.update({k: "" for k in METRIC_COLUMNS})
    row["engine"] = engine
    row["error"] = str(exc)
    return row


def _eval_sweep_point(task):
    """One grid point -> list of rows. Top-level so worker pools can pickle it."""
    spec, value = task
    rows = []
    try:
        params = _point_params(spec, value)
    except Exception as exc:
        bad = replace(spec.fixed)  # report the offending value in its column
        row = _error_row(None, spec.engines, exc)
        row.update(_param_columns(bad))
        row[spec.swept_param] = value
        return [row]

    report = None
    dc = None
    if spec.engines in ("analytic", "both"):
        try:
            report, _, dc = _analytic_point(params, spec.epsilon, spec.g_policy)
            rows.append(_analytic_row(params, report, dc))
        except Exception as exc:
            rows.append(_error_row(params, "analytic", exc))
    if spec.engines in ("simulate", "both"):
        g_used = params.G
        if spec.engines == "both" and spec.g_policy == "optimize" and report is not None:
            g_used = report.g_star
        try:
            sim_params = validate(replace(params, G=g_used))
            result = run_simulation(sim_params, spec.sim)
            rows.append(_simulate_row(sim_params, result))
        except Exception as exc:
            rows.append(_error_row(params, "simulate", exc))
    return rows


def sweep(spec: SweepSpec, jobs=1) -> list[dict]:
    """Evaluate every grid point; rows stay in grid order, one per engine.

    Per-point failures are recorded in the row's error column and the
    sweep continues.
    """
    spec.check()
    tasks = [(spec, value) for value in spec.grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(_eval_sweep_point, tasks))
    else:
        nested = [_eval_sweep_point(t) for t in tasks]
    return [row for group in nested for row in group]


def compare(spec: SweepSpec, jobs=1) -> list[dict]:
    """Analytic vs simulated deltas per grid point.

    Reports absolute and relative deltas for the secondary throughput, the
    idle probability, and the primary throughput, plus the total-variation
    distance between the stationary vector and the simulated occupancy.
    """
    spec = replace(spec, engines="both").check()
    tasks = [(spec, value) for value in spec.grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_compare_point, tasks))
    else:
        out = [_compare_point(t) for t in tasks]
    return out


def _rel(delta, ref):
    return abs(delta) / abs(ref) if ref != 0 else ""


def _compare_point(task):
    spec, value = task
    try:
        params = _point_params(spec, value)
        report, chain, dc = _analytic_point(params, spec.epsilon, spec.g_policy)
        sim_params = validate(replace(params, G=report.g_star))
        result = run_simulation(sim_params, spec.sim)
    except Exception as exc:
        row = {k: "" for k in PARAM_FIELDS + COMPARE_METRICS}
        row.update(_param_columns(spec.fixed))
        row[spec.swept_param] = value
        row["error"] = str(exc)
        return row
    tv = 0.5 * float(np.abs(chain.chi - result.energy_occupancy_hist).sum())
    row = _param_columns(sim_params)
    row.update(
        g=report.g_star,
        a_mu_s=report.mu_s_star,
        s_mu_s=result.su_throughput_hat,
        d_mu_s_abs=abs(report.mu_s_star - result.su_throughput_hat),
        d_mu_s_rel=_rel(report.mu_s_star - result.su_throughput_hat, report.mu_s_star),
        a_pi_idle=report.pi_idle,
        s_pi_idle=result.pi_idle_hat,
        d_pi_idle_abs=abs(report.pi_idle - result.pi_idle_hat),
        d_pi_idle_rel=_rel(report.pi_idle - result.pi_idle_hat, report.pi_idle),
        a_pu_throughput=report.pu_throughput,
        s_pu_throughput=result.pu_throughput_hat,
        d_pu_throughput_abs=abs(report.pu_throughput - result.pu_throughput_hat),
        d_pu_throughput_rel=_rel(report.pu_throughput - result.pu_throughput_hat,
                                 report.pu_throughput),
        tv_occupancy=tv,
        seed=result.seed,
        slots=result.n_slots,
        error="",
    )
    return row


# ---------------------------------------------------------------------------
# figure presets: the reference constants with per-figure overrides

_LAMBDA_P_GRID = tuple(round(0.05 * i, 2) for i in range(21))
_SIGMA_PPD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 31))


def preset_specs(name, engines="analytic", sim=None, g_policy="optimize",
                 epsilon=harvest.DEFAULT_TAIL_EPS) -> list[SweepSpec]:
    """Sweep specs reproducing the bundled figure-style experiments."""
    common = dict(engines=engines, sim=sim, g_policy=g_policy, epsilon=epsilon)
    if name == "fig2":
        return [
            SweepSpec("lambda_p", _LAMBDA_P_GRID,
                      default_params(lambda_e=0.0, eta=eta, E_max=e_max), **common)
            for eta in (0.4, 0.6) for e_max in (6, 10)
        ]
    if name == "fig3":
        fixed = default_params(eta=0.6, lambda_p=0.4, lambda_e=0.0, E_max=10,
                               P_max=dbm_to_watts(1.76))
        return [SweepSpec("sigma_ppd", _SIGMA_PPD_GRID, fixed, **common)]
    if name == "fig4":
        combos = ((0.0, 0.5), (0.6, 0.0), (0.6, 0.5))  # (eta, lambda_e)
        return [
            SweepSpec("lambda_p", _LAMBDA_P_GRID,
                      default_params(eta=eta, lambda_e=lam_e, E_max=6), **common)
            for eta, lam_e in combos
        ]
    if name == "fig5":
        return [
            SweepSpec("lambda_p", _LAMBDA_P_GRID,
                      default_params(eta=0.2, lambda_e=lam_e, E_max=e_max), **common)
            for lam_e in (0.5, 1.0) for e_max in (6, 10)
        ]
    raise ParameterError([f"preset: unknown preset {name!r}"])


# ---------------------------------------------------------------------------
# output plumbing

def _filter_columns(columns, outputs):
    if not outputs:
        return columns
    keep = set(outputs) | {"engine", "error"}
    return [c for c in columns if c in keep or c in PARAM_FIELDS]


def write_rows(rows, columns, out=None, fmt="csv"):
    """Write rows as CSV (stable column set) or JSON (full values)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, restval="", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(rows, indent=2, default=_jsonable) + "\n"
    else:
        raise ParameterError([f"format: unknown format {fmt!r}"])
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# argument parsing

def _add_param_flags(parser):
    grp = parser.add_argument_group("model parameters")
    grp.add_argument("--config", metavar="PATH", help="flat key=value parameter file")
    for name in PARAM_FIELDS:
        flag = "--" + name.lower().replace("_", "-")
        typ = int if name in ("E_max", "G") else float
        grp.add_argument(flag, dest=name, type=typ, default=None, metavar=name)
    grp.add_argument("--p-max-dbm", dest="p_max_dbm", type=float, default=None,
                     metavar="DBM", help="primary power cap in dBm (converted on ingest)")
    grp.add_argument("--epsilon", type=float, default=harvest.DEFAULT_TAIL_EPS,
                     help="pmf truncation tolerance")


def _add_sim_flags(parser):
    grp = parser.add_argument_group("simulation")
    grp.add_argument("--seed", type=int, default=12345)
    grp.add_argument("--slots", type=int, default=1_000_000)
    grp.add_argument("--warmup", type=int, default=10_000)
    grp.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")


def _add_out_flags(parser):
    grp = parser.add_argument_group("output")
    grp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    grp.add_argument("--format", choices=("csv", "json"), default="csv")
    grp.add_argument("--outputs", metavar="COLS",
                     help="comma-separated metric columns to keep")


def params_from_args(args) -> SystemParams:
    overrides = {}
    for name in PARAM_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "p_max_dbm", None) is not None:
        if "P_max" in overrides:
            raise ParameterError(["P_max: given in both Watts and dBm"])
        overrides["P_max"] = dbm_to_watts(args.p_max_dbm)
    return load_params(getattr(args, "config", None), overrides)


def _sim_config(args) -> SimConfig:
    try:
        return SimConfig(n_slots=args.slots, seed=args.seed, warmup=args.warmup)
    except ValueError as exc:
        raise ParameterError([f"slots/warmup: {exc}"])


def _outputs(args):
    return tuple(s.strip() for s in args.outputs.split(",")) if args.outputs else ()


# ---------------------------------------------------------------------------
# subcommands

def cmd_analytic(args):
    params = params_from_args(args)
    report, chain, dc = _analytic_point(params, args.epsilon,
                                        "fixed" if args.fixed_g else "optimize")
    row = _analytic_row(params, report, dc)
    for g, value in sorted(report.mu_s_by_g.items()):
        row[f"mu_s_g{g}"] = value
    columns = PARAM_FIELDS + METRIC_COLUMNS + [f"mu_s_g{g}" for g in sorted(report.mu_s_by_g)]
    if args.dump_pmfs:
        os.makedirs(args.dump_pmfs, exist_ok=True)
        idle, active = harvest.arrival_pmfs(params, dc, args.epsilon)
        idle.write_text(os.path.join(args.dump_pmfs, "idle_arrivals.txt"))
        active.write_text(os.path.join(args.dump_pmfs, "active_arrivals.txt"))
        harvest.rf_pmf(params, dc, args.epsilon).write_text(
            os.path.join(args.dump_pmfs, "rf_conditional.txt"))
    if args.dump_chain:
        os.makedirs(args.dump_chain, exist_ok=True)
        np.savetxt(os.path.join(args.dump_chain, "omega.txt"), chain.omega, fmt="%.17g")
        np.savetxt(os.path.join(args.dump_chain, "chi.txt"), chain.chi, fmt="%.17g")
    write_rows([row], _filter_columns(columns, _outputs(args)), args.out, args.format)
    return 0


def cmd_simulate(args):
    params = params_from_args(args)
    result = run_simulation(params, _sim_config(args))
    row = _simulate_row(params, result)
    row["pu_queue_mean"] = result.pu_queue_mean
    columns = PARAM_FIELDS + METRIC_COLUMNS + ["pu_queue_mean"]
    for j, frac in enumerate(result.energy_occupancy_hist):
        row[f"occ_{j}"] = frac
    columns += [f"occ_{j}" for j in range(len(result.energy_occupancy_hist))]
    if args.format == "json":
        row["rf_harvest_hist"] = result.rf_harvest_hist
        row["nature_harvest_hist"] = result.nature_harvest_hist
        row["total_harvested"] = result.total_harvested
        row["total_consumed"] = result.total_consumed
        row["total_dropped"] = result.total_dropped
        row["final_energy_level"] = result.final_energy_level
    write_rows([row], _filter_columns(columns, _outputs(args)), args.out, args.format)
    return 0


def _grid_from_args(args):
    if args.values:
        return tuple(float(s) for s in args.values.split(","))
    if args.grid:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise ParameterError(["grid: expected START:STOP:STEP"])
        start, stop, step = (float(p) for p in parts)
        if step == 0:
            raise ParameterError(["grid: step must be nonzero"])
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ParameterError(["grid: empty range"])
        return tuple(round(start + i * step, 12) for i in range(count))
    raise ParameterError(["grid: provide --grid or --values"])


def cmd_sweep(args):
    fixed = params_from_args(args)
    sim = _sim_config(args) if args.engine in ("simulate", "both") else None
    spec = SweepSpec(
        swept_param=args.param,
        grid=_grid_from_args(args),
        fixed=fixed,
        outputs=_outputs(args),
        engines=args.engine,
        sim=sim,
        g_policy=args.g_policy,
        epsilon=args.epsilon,
    )
    rows = sweep(spec, jobs=args.jobs)
    write_rows(rows, _filter_columns(PARAM_FIELDS + METRIC_COLUMNS, spec.outputs),
               args.out, args.format)
    return 0


def cmd_compare(args):
    fixed = params_from_args(args)
    spec = SweepSpec(
        swept_param=args.param,
        grid=_grid_from_args(args),
        fixed=fixed,
        outputs=_outputs(args),
        engines="both",
        sim=_sim_config(args),
        g_policy=args.g_policy,
        epsilon=args.epsilon,
    )
    rows = compare(spec, jobs=args.jobs)
    write_rows(rows, _filter_columns(PARAM_FIELDS + COMPARE_METRICS, spec.outputs),
               args.out, args.format)
    return 0


def cmd_preset(args):
    sim = _sim_config(args) if args.engine in ("simulate", "both") else None
    specs = preset_specs(args.name, engines=args.engine, sim=sim, epsilon=args.epsilon)
    rows = []
    for spec in specs:
        rows.extend(sweep(spec, jobs=args.jobs))
    write_rows(rows, PARAM_FIELDS + METRIC_COLUMNS, args.out, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehshare",
        description="Exact throughput analysis and slot simulation for spectrum "
                    "sharing with an energy-harvesting secondary user.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form report at one operating point")
    _add_param_flags(p)
    _add_out_flags(p)
    p.add_argument("--fixed-g", action="store_true",
                   help="evaluate at the configured G instead of optimizing")
    p.add_argument("--dump-pmfs", metavar="DIR", help="write arrival pmfs as two-column text")
    p.add_argument("--dump-chain", metavar="DIR", help="write omega and chi as text matrices")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="Monte Carlo run at one operating point")
    _add_param_flags(p)
    _add_sim_flags(p)
    _add_out_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter over a grid")
    _add_param_flags(p)
    _add_sim_flags(p)
    _add_out_flags(p)
    p.add_argument("--param", required=True, help="SystemParams field to sweep")
    p.add_argument("--grid", help="START:STOP:STEP (inclusive)")
    p.add_argument("--values", help="comma-separated grid values")
    p.add_argument("--engine", choices=("analytic", "simulate", "both"), default="analytic")
    p.add_argument("--g-policy", choices=("optimize", "fixed"), default="optimize")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="analytic vs simulated deltas over a grid")
    _add_param_flags(p)
    _add_sim_flags(p)
    _add_out_flags(p)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", help="START:STOP:STEP (inclusive)")
    p.add_argument("--values", help="comma-separated grid values")
    p.add_argument("--g-policy", choices=("optimize", "fixed"), default="optimize")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("preset", help="run a bundled figure-style experiment "
                                      "(operating points are hard-coded)")
    p.add_argument("name", choices=("fig2", "fig3", "fig4", "fig5"))
    _add_sim_flags(p)
    _add_out_flags(p)
    p.add_argument("--engine", choices=("analytic", "simulate", "both"), default="analytic")
    p.add_argument("--epsilon", type=float, default=harvest.DEFAULT_TAIL_EPS,
                   help="pmf truncation tolerance")
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
