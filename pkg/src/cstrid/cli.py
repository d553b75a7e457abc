"""Command-line entry point: ``cstrid run | sweep | check | schema``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .config import load_config
from .sim import CSV_COLUMNS, SCHEMA_VERSION, SWEEP_PARAMETERS, run_scenario, sweep, sweep_table, write_csv


def _parse_set(items):
    overrides = {}
    for item in items or ():
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    return overrides


def _build_config(args):
    overrides = _parse_set(args.set)
    if args.horizon is not None:
        overrides["run.horizon"] = str(args.horizon)
    if args.step is not None:
        overrides["run.step"] = str(args.step)
    if args.no_ideal:
        overrides["estimator.ideal"] = "false"
    return load_config(args.config, overrides).validate()


def _write_summary(path, summary):
    clean = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
             for k, v in summary.items()}
    path.write_text(json.dumps(clean, indent=2) + "\n")


def cmd_run(args):
    cfg = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rec = run_scenario(cfg)
    write_csv(rec, out / "run.csv")
    (out / "scenario.cfg").write_text(cfg.to_text())
    summary = {k: v for k, v in rec.summary.items() if k != "wall_time_s"}
    _write_summary(out / "summary.json", summary)
    print(f"wrote {len(rec)} samples to {out / 'run.csv'}")
    for i, e in enumerate(rec.summary["rel_err_final"], 1):
        print(f"  th{i}: estimate {rec.summary['theta_hat_final'][i - 1]:.8g}, relative error {e:.3e}")
    print(f"  IE crossing time: {rec.summary['ie_crossing_time']}, wall time {rec.summary['wall_time_s']:.2f}s")
    return 0


def _parse_sweep(text):
    if "=" not in text:
        raise SystemExit(f"--sweep expects name=v1,v2,..., got {text!r}")
    name, values = text.split("=", 1)
    name = name.strip()
    if name not in SWEEP_PARAMETERS:
        raise SystemExit(f"sweep parameter must be one of {', '.join(sorted(SWEEP_PARAMETERS))}")
    return name, [float(v) for v in values.split(",") if v.strip()]


def cmd_sweep(args):
    cfg = _build_config(args)
    name, values = _parse_sweep(args.sweep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = sweep(cfg, name, values, jobs=args.jobs)
    for k, r in enumerate(results):
        if r.ok:
            write_csv(r.record, out / f"run_{k:02d}_{name}={r.value:g}.csv")
    rows = sweep_table(results)
    fields = []
    for row in rows:
        fields += [f for f in row if f not in fields]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    (out / "scenario.cfg").write_text(cfg.to_text())
    for row in rows:
        if row["status"] == "ok":
            errs = " ".join(f"{row[f'th{i}_rel_err']:.2e}" for i in range(1, 6))
            print(f"{name}={row['value']:g}: rel errors {errs}")
        else:
            print(f"{name}={row['value']:g}: FAILED {row['error']}")
    return 0 if all(r.ok for r in results) else 1


def cmd_check(args):
    from .acceptance import AcceptanceContext, run_checks

    cfg = _build_config(args)
    numbers = {int(n) for n in args.only.split(",")} if args.only else None
    results = run_checks(AcceptanceContext(base=cfg), numbers, stream=sys.stdout)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_schema(args):
    print(f"# {SCHEMA_VERSION}")
    for c in CSV_COLUMNS:
        print(c)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="cstrid", description="CSTR parameter estimation runs")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--config", help="scenario file with 'section.key = value' lines")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--horizon", type=float, help="simulated time [hr]")
        p.add_argument("--step", type=float, help="integration step [hr]")
        p.add_argument("--no-ideal", action="store_true", help="skip the ideal I&I oracle estimator")

    p = sub.add_parser("run", help="run one scenario")
    scenario_args(p)
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    scenario_args(p)
    p.add_argument("--sweep", required=True, metavar="NAME=V1,V2,...",
                   help=f"one of {', '.join(sorted(SWEEP_PARAMETERS))}")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run the acceptance checks")
    scenario_args(p)
    p.add_argument("--only", help="comma-separated check numbers")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("schema", help="print the run CSV columns")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
