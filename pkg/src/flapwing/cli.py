"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input-data error, 3 numerical
failure, 1 anything else (for example an unwritable output directory).
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import config as cfgmod
from .compare import compare
from .errors import ConfigError, EmptyHistoryError, FlapwingError, InsufficientOverlapError, NumericalError
from .export import dumps, write_cycle_csv, write_record, write_report, write_wake_grid, _write
from .loadcell import ingest_loadcell
from .simulator import run
from .wake import default_plane, sample_plane, shed_wake

log = logging.getLogger("flapwing")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _progress(label):
    def report(step, total):
        print(f"{label}: {100.0 * step / total:5.1f}% ({step}/{total} steps)", file=sys.stderr, flush=True)
    return report


def _load(args):
    rc = cfgmod.parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfgmod.write_echo(rc, out)
    return rc, out


def _summary(record):
    n = len(record)
    if n == 0:
        return {"steps": 0}
    return {"steps": n, "mean_lift_N": float(np.mean(record.lift)), "mean_drag_N": float(np.mean(record.drag)),
            "max_abs_side_N": float(np.max(np.abs(record.side))),
            "max_constraint_residual": float(np.max(record.constraint_residual)),
            "max_loop_residual_m": float(np.max(record.loop_residual))}


def cmd_simulate(args):
    rc, out = _load(args)
    sim = rc.to_sim_config(aero_mode=args.mode)
    record = run(sim, progress=None if args.quiet else _progress(f"simulate[{sim.aero_mode}]"))
    write_record(record, out)
    _write(out / "summary.json", dumps(_summary(record)))
    return EXIT_OK


def cmd_compare(args):
    rc, out = _load(args)
    trace = ingest_loadcell(args.loadcell, rc.loadcell.cutoff_hz, rc.loadcell.filter_order,
                            rc.loadcell.max_rate_hz)
    reports = {}
    for mode in ("quasisteady", "wagner"):
        record = run(rc.to_sim_config(aero_mode=mode),
                     progress=None if args.quiet else _progress(f"compare[{mode}]"))
        write_record(record, out, prefix=f"forces_{mode}")
        rep = compare(record, trace)
        write_cycle_csv(rep, out / f"cycle_{mode}.csv")
        reports[mode] = rep.to_dict()
        print(f"{mode}: RMS lift {rep.rms_lift:.4f} N, RMS drag {rep.rms_drag:.4f} N, "
              f"offset {rep.offset_s * 1e3:.2f} ms", file=sys.stderr)
    write_report({"loadcell": str(args.loadcell), "rejected_rows": trace.meta.get("rejected_rows", 0),
                  "modes": reports}, out / "comparison.json")
    return EXIT_OK


def cmd_wake(args):
    rc, out = _load(args)
    sim = rc.to_sim_config()
    record = run(sim, progress=None if args.quiet else _progress("wake"))
    write_record(record, out)
    w = rc.wake
    offset = args.plane_offset if args.plane_offset is not None else w.plane_offset
    n = len(record)
    if n == 0:
        raise EmptyHistoryError("zero-duration run leaves no wake to sample")
    # snapshots spread over the last flap cycle
    per = max(1, int(round(1.0 / (sim.frequency * sim.dt))))
    ends = np.unique(np.linspace(max(0, n - per), n - 1, args.slices).round().astype(int))
    for j, i in enumerate(ends):
        t_end = float(record.t[i])
        if w.t_end is not None and args.slices == 1:
            t_end = w.t_end
        sheet = shed_wake(record, stride=w.stride, t_end=t_end)
        plane = default_plane(record, offset, w.ny, w.nz, index=i)
        grid = sample_plane(sheet, plane, w.core)
        write_wake_grid(grid, out / f"wake_{j:03d}.csv",
                        {"degenerate": sheet.meta.get("degenerate", False), "segments": len(sheet)})
    return EXIT_OK


def _sweep_one(job):
    index, data, out = job
    rc = cfgmod.config_from_dict(data, source=f"sweep run {index}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfgmod.write_echo(rc, out)
    try:
        record = run(rc.to_sim_config())
    except NumericalError as err:
        return index, {"error": str(err)}
    write_record(record, out)
    return index, _summary(record)


def cmd_sweep(args):
    rc, out = _load(args)
    key, values = cfgmod.parse_vary(args.vary)
    jobs = []
    for i, v in enumerate(values):
        variant = cfgmod.with_override(rc, key, v)
        jobs.append((i, cfgmod.to_plain(variant), str(out / f"run_{i:03d}")))
    workers = args.jobs or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    results.sort(key=lambda r: r[0])
    rows = [{"index": i, key: values[i], **res} for i, res in results]
    _write(out / "sweep.json", dumps({"key": key, "runs": rows}))
    if not args.quiet:
        for row in rows:
            print(f"{key}={row[key]}: {row.get('mean_lift_N', row.get('error'))}", file=sys.stderr)
    failed = [r for r in rows if "error" in r]
    return EXIT_NUMERICAL if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="flapwing", description="Flapping-wing robot simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("-q", "--quiet", action="store_true", help="no progress output")

    s = sub.add_parser("simulate", help="run one simulation and export the force record")
    common(s)
    s.add_argument("--mode", choices=("quasisteady", "wagner"), help="override sim.aero_mode")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run both aerodynamic modes against a load-cell CSV")
    common(c)
    c.add_argument("--loadcell", required=True, help="CSV: t_s,fx_N,fy_N,fz_N,tx_Nmm,ty_Nmm,tz_Nmm")
    c.set_defaults(func=cmd_compare)

    w = sub.add_parser("wake", help="sample the wake behind the trailing edge")
    common(w)
    w.add_argument("--plane-offset", type=float, help="plane distance behind the trailing edge, m")
    w.add_argument("--slices", type=int, default=1, help="number of snapshots over the last cycle")
    w.set_defaults(func=cmd_wake)

    sw = sub.add_parser("sweep", help="run a parameter sweep concurrently")
    common(sw)
    sw.add_argument("--vary", required=True, help="dotted.key=start:stop:num or dotted.key=v1,v2")
    sw.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, InsufficientOverlapError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, EmptyHistoryError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FlapwingError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
