"""Command-line front end.

Exit codes: 0 ok, 1 usage or configuration error, 2 analysis infeasible
(overloaded station), 3 some runs failed.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import channel as ch
from . import config as cf
from . import experiments as ex
from . import plots
from . import qna
from . import traffic as tr
from .sim import ConfigError, RunConfig, SimReport, Simulation

log = logging.getLogger("svbackbone")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _write_csv(path, header: Sequence[str], rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _fmt(x):
    if isinstance(x, float):
        return "" if math.isnan(x) else f"{x:.9g}"
    return x


# --------------------------------------------------------------------------
# analyze-trace


def cmd_analyze_trace(args) -> int:
    cols = tr.ColumnMap(
        vehicle_id=args.col_id, frame=args.col_frame, x=args.col_x, y=args.col_y,
        velocity=args.col_speed, vehicle_class=args.col_class, frame_period=args.frame_period,
        length_scale=args.length_scale,
    )
    try:
        with open(args.trace, newline="") as fh:
            parsed = tr.parse_trace(fh, cols, delimiter=args.delimiter)
    except OSError as exc:
        raise UsageError(f"cannot read trace: {exc}")
    except tr.TraceFormatError as exc:
        raise UsageError(str(exc))
    if parsed.bad_rows:
        shown = ", ".join(map(str, parsed.bad_rows[:20]))
        log.warning("skipped %d malformed rows (lines %s%s)", parsed.skipped, shown,
                    ", ..." if len(parsed.bad_rows) > 20 else "")
    recs = parsed.records
    if not recs:
        log.warning("trace has no usable rows; writing empty outputs")
    os.makedirs(args.out, exist_ok=True)
    stds = tr.speed_std_per_vehicle(recs)
    means = tr.mean_speed_per_vehicle(recs)
    _write_csv(os.path.join(args.out, "speed_std.csv"), ["vehicle_id", "vehicle_class", "speed_std_mps"],
               [(vid, means[vid][0].name, _fmt(s)) for vid, s in sorted(stds.items())])
    _write_csv(os.path.join(args.out, "mean_speed.csv"), ["vehicle_id", "vehicle_class", "mean_speed_mps"],
               [(vid, c.name, _fmt(m)) for vid, (c, m) in sorted(means.items())])
    thr = args.threshold_kmh * tr.KMH
    shares = tr.share_below(recs, thr)
    _write_csv(os.path.join(args.out, "std_share_below.csv"),
               ["vehicle_class", "threshold_mps", "share_below"],
               [(c.name, _fmt(thr), _fmt(v)) for c, v in sorted(shares.items())])
    windows = tr.class_share_and_density(recs, args.window, args.segment_length) if recs else []
    tr.write_window_stats(os.path.join(args.out, "truck_windows.csv"), windows)
    if recs:
        plots.speed_std_cdf(os.path.join(args.out, "speed_std.svg"), recs, stds)
        plots.mean_speed_hist(os.path.join(args.out, "mean_speed.svg"), means)
        plots.window_series(os.path.join(args.out, "truck_windows.svg"), windows)
    for c, v in sorted(shares.items()):
        print(f"{c.name}: {100 * v:.1f}% of vehicles with speed std below {args.threshold_kmh:g} km/h")
    return EXIT_OK


# --------------------------------------------------------------------------
# run-sim / compare


def _base_config(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["sim.seed"] = str(args.seed)
    if getattr(args, "scheme", None):
        overrides["sim.scheme"] = args.scheme
    return cf.load_config(args.config, overrides)


def _expand(base: RunConfig, axes, reps: int, seeds: Optional[List[int]]):
    """Yield (point dict, rep index, config) over the sweep grid x replications."""
    if reps < 1:
        raise UsageError("--reps must be >= 1")
    if seeds is not None:
        if len(set(seeds)) != len(seeds):
            raise UsageError("duplicate seeds across replications")
        if len(seeds) != reps:
            raise UsageError("--seeds must list exactly --reps values")
    else:
        seeds = [base.seed + r for r in range(reps)]
    names = [n for n, _ in axes]
    for combo in itertools.product(*[v for _, v in axes]) if axes else [()]:
        point = dict(zip(names, combo))
        values = {cf.resolve_key(k): v for k, v in point.items()}
        cfg = cf.build_config(values, base)
        for r, s in enumerate(seeds):
            yield point, r, replace(cfg, seed=s)


def _safe_run(cfg: RunConfig):
    try:
        sim = Simulation(cfg)
        return sim.run(), None
    except Exception as exc:  # a failed run is recorded, the rest continue
        return None, f"{type(exc).__name__}: {exc}"


def _run_all(cfgs: List[RunConfig], workers: int):
    if workers <= 1 or len(cfgs) <= 1:
        return [_safe_run(c) for c in cfgs]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_safe_run, cfgs))


def _aggregate(jobs, results, names, metrics):
    groups: Dict[tuple, List[SimReport]] = {}
    for (point, _, _), (rep, _) in zip(jobs, results):
        key = tuple(point[n] for n in names)
        groups.setdefault(key, [])
        if rep is not None:
            groups[key].append(rep)
    rows = []
    for key, reps in groups.items():
        row = list(key) + [len(reps)]
        for m in metrics:
            vals = np.array([getattr(r, m) for r in reps], dtype=float)
            vals = vals[~np.isnan(vals)]
            row += [_fmt(float(vals.mean())) if len(vals) else "",
                    _fmt(float(vals.std(ddof=1))) if len(vals) > 1 else ""]
        rows.append(row)
    return rows


AGG_METRICS = ("pdr", "mean_e2ed", "mean_e2ed_connected", "throughput_pps", "throughput_connected_pps",
               "throughput_bps", "qna_e2ed", "qna_throughput", "churn")


def cmd_run_sim(args) -> int:
    base = _base_config(args)
    axes = cf.parse_sweep(args.sweep or [])
    names = [n for n, _ in axes]
    jobs = list(_expand(base, axes, args.reps, args.seeds))
    results = _run_all([c for _, _, c in jobs], args.workers)
    os.makedirs(args.out, exist_ok=True)
    scal = list(SimReport.SCALARS)
    header = names + ["rep", "status"] + list(results[0][0].row().keys() if results[0][0] else
                                             SimReport.SCALARS)
    failures = 0
    rows, samples, events = [], [], []
    for i, ((point, r, cfg), (rep, err)) in enumerate(zip(jobs, results)):
        lead = [point[n] for n in names] + [r]
        if rep is None:
            failures += 1
            log.error("run %d (seed %d) failed: %s", i, cfg.seed, err)
            rows.append(lead + [f"failed: {err}"] + [""] * len(scal))
            continue
        rows.append(lead + ["ok"] + [_fmt(v) for v in rep.row().values()])
        samples += [(i, cfg.seed, _fmt(x)) for x in rep.e2ed_samples]
        events += [(i, e) for e in rep.events]
    _write_csv(os.path.join(args.out, "report.csv"), header, rows)
    _write_csv(os.path.join(args.out, "e2ed_samples.csv"), ["run", "seed", "e2ed_s"], samples)
    with open(os.path.join(args.out, "protocol_events.csv"), "w") as fh:
        fh.write("run,time_s,node,event,detail\n")
        for i, line in events:
            fh.write(f"{i},{line}\n")
    agg_header = names + ["runs"] + [f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "std")]
    _write_csv(os.path.join(args.out, "aggregate.csv"), agg_header, _aggregate(jobs, results, names, AGG_METRICS))
    with open(os.path.join(args.out, "config.ini"), "w") as fh:
        fh.write(cf.dump_config(base))
    print(f"{len(jobs) - failures}/{len(jobs)} runs ok -> {args.out}")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_compare(args) -> int:
    """Simulation vs. analysis and two-tier vs. baseline on a sweep."""
    base = _base_config(args)
    axes = cf.parse_sweep(args.sweep or [])
    if not axes:
        raise UsageError("compare needs at least one --sweep axis")
    names = [n for n, _ in axes]
    jobs = list(_expand(base, axes, args.reps, args.seeds))
    cfgs = []
    for _, _, c in jobs:
        cfgs += [replace(c, scheme="two-tier"), replace(c, scheme="baseline")]
    results = _run_all(cfgs, args.workers)
    tt = results[0::2]
    bl = results[1::2]
    failures = sum(r is None for r, _ in results)
    groups: Dict[tuple, list] = {}
    for (point, _, _), a, b in zip(jobs, tt, bl):
        if a[0] is None or b[0] is None:
            continue
        groups.setdefault(tuple(point[n] for n in names), []).append((a[0], b[0]))
    rows = []
    for key, pairs in groups.items():
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]

        def m(rs, attr):
            v = np.array([getattr(r, attr) for r in rs], dtype=float)
            return float(np.nanmean(v)) if np.any(~np.isnan(v)) else math.nan

        sim_d, qna_d = m(a, "mean_e2ed_connected"), m(a, "qna_e2ed")
        sim_t, qna_t = m(a, "throughput_connected_pps"), m(a, "qna_throughput")
        rows.append(list(key) + [len(pairs)] + [_fmt(x) for x in (
            sim_d, qna_d, abs(sim_d - qna_d) / qna_d if qna_d else math.nan,
            sim_t, qna_t, abs(sim_t - qna_t) / qna_t if qna_t else math.nan,
            m(a, "mean_e2ed"), m(b, "mean_e2ed"), m(a, "throughput_pps"), m(b, "throughput_pps"),
        )])
    os.makedirs(args.out, exist_ok=True)
    header = names + ["pairs", "sim_e2ed_s", "qna_e2ed_s", "e2ed_rel_error", "sim_throughput_pkt_per_s",
                      "qna_throughput_pkt_per_s", "throughput_rel_error", "two_tier_e2ed_s", "baseline_e2ed_s",
                      "two_tier_throughput_pkt_per_s", "baseline_throughput_pkt_per_s"]
    _write_csv(os.path.join(args.out, "compare.csv"), header, rows)
    if len(names) == 1 and rows:
        plots.compare_plot(os.path.join(args.out, "compare.svg"), names[0], header, rows)
    print(f"{len(groups)} sweep points -> {args.out}")
    return EXIT_PARTIAL if failures else EXIT_OK


# --------------------------------------------------------------------------
# run-qna


def cmd_run_qna(args) -> int:
    try:
        model, doc = qna.load_chain(args.chain)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise UsageError(f"bad chain file: {exc}")
    try:
        sol = qna.solve_chain(model)
    except qna.OverloadError as exc:
        print(f"error: station {exc.station} overloaded (rho={exc.rho:.4f})", file=sys.stderr)
        return EXIT_INFEASIBLE
    hops = qna.forward_hop_rates(model)
    os.makedirs(args.out, exist_ok=True)
    header = ["station", "lam_ext_pkt_per_s", "scv_ext", "lam_in_pkt_per_s", "scv_in", "lam_pkt_per_s",
              "scv_arrival", "tau_pkt_per_s", "scv_service", "rho", "alpha", "wait_s"]
    _write_csv(os.path.join(args.out, "stations.csv"), header,
               [(k, *[_fmt(float(x)) for x in (s.lam_ext, s.scv_ext, s.lam_in, s.scv_in, s.lam, s.scv_a, s.tau,
                                              s.scv_s, s.rho, s.alpha, s.wait)])
                for k, s in enumerate(sol.stations)])
    delay = qna.chain_delay(sol, 0, len(model), hops)
    thr = qna.chain_throughput(sol)
    _write_csv(os.path.join(args.out, "summary.csv"), ["e2ed_s", "throughput_pkt_per_s"], [(_fmt(delay), _fmt(thr))])
    if args.surface:
        grid = [float(x) for x in args.surface.split(",")]
        try:
            rows = qna.delay_surface(model, grid, grid)
        except qna.OverloadError as exc:
            print(f"error: station {exc.station} overloaded (rho={exc.rho:.4f})", file=sys.stderr)
            return EXIT_INFEASIBLE
        _write_csv(os.path.join(args.out, "surface.csv"), ["ca2", "cs2", "e2ed_s"],
                   [tuple(_fmt(float(v)) for v in r) for r in rows])
        plots.surface_plot(os.path.join(args.out, "surface.svg"), rows)
    print(f"E2ED {delay:.6g} s, throughput {thr:.6g} pkt/s")
    return EXIT_OK


# --------------------------------------------------------------------------
# channel, PDR and calibration experiments


def cmd_attenuation(args) -> int:
    ds = [float(d) for d in args.distances.split(",")] if args.distances else list(range(10, 301, 10))
    rows = list(ch.attenuation_sweep(ds))
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "attenuation.csv"), ["distance_m", "loss_db_auto", "loss_db_truck"],
               [tuple(_fmt(float(v)) for v in r) for r in rows])
    plots.attenuation_plot(os.path.join(args.out, "attenuation.svg"), rows)
    return EXIT_OK


def cmd_pdr(args) -> int:
    base = _base_config(args)
    curves = ex.measure_pdr(base, reps=args.reps, seed=base.seed)
    os.makedirs(args.out, exist_ok=True)
    cids = sorted(curves)
    rates = curves[cids[0]].rates
    _write_csv(os.path.join(args.out, "pdr.csv"), ["rate_mbps"] + [f"class{c}_pdr" for c in cids],
               [(r, *[_fmt(curves[c].pdr[i]) for c in cids]) for i, r in enumerate(rates)])
    plots.pdr_plot(os.path.join(args.out, "pdr.svg"), curves)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    base = _base_config(args)
    best, pts = ex.calibrate_weights(base, reps=args.reps, seed=base.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "weights.csv"),
               ["alpha", "beta", "mean_link_duration_s", "mean_rate_mbps", "volume_mbit", "links"],
               [(p.alpha, p.beta, _fmt(p.mean_ld), _fmt(p.mean_rate), _fmt(p.volume), p.samples) for p in pts])
    plots.weights_plot(os.path.join(args.out, "weights.svg"), pts)
    print(f"alpha={best.alpha:g} beta={best.beta:g}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svbackbone", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sweep=True):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, help="seed (base seed for replications)")
        sp.add_argument("--scheme", choices=["two-tier", "baseline"])
        if sweep:
            sp.add_argument("--reps", type=int, default=1)
            sp.add_argument("--seeds", type=lambda s: [int(x) for x in s.split(",")],
                            help="explicit comma-separated seeds, one per replication")
            sp.add_argument("--sweep", action="append", metavar="KEY=V1,V2,...")
            sp.add_argument("--workers", type=int, default=1)

    a = sub.add_parser("analyze-trace", help="speed and truck statistics of a trajectory file")
    a.add_argument("trace")
    a.add_argument("--out", default="out")
    a.add_argument("--delimiter", default=",")
    a.add_argument("--threshold-kmh", type=float, default=12.0)
    a.add_argument("--window", type=float, default=60.0, help="window length, s")
    a.add_argument("--segment-length", type=float, default=640.0, help="study segment, m")
    d = tr.ColumnMap()
    a.add_argument("--col-id", default=d.vehicle_id)
    a.add_argument("--col-frame", default=d.frame)
    a.add_argument("--col-x", default=d.x)
    a.add_argument("--col-y", default=d.y)
    a.add_argument("--col-speed", default=d.velocity)
    a.add_argument("--col-class", default=d.vehicle_class)
    a.add_argument("--frame-period", type=float, default=d.frame_period)
    a.add_argument("--length-scale", type=float, default=d.length_scale, help="meters per file length unit")
    a.set_defaults(func=cmd_analyze_trace)

    s = sub.add_parser("run-sim", help="simulation runs over a sweep")
    common(s)
    s.set_defaults(func=cmd_run_sim)

    c = sub.add_parser("compare", help="simulation vs. analysis and two-tier vs. baseline")
    common(c)
    c.set_defaults(func=cmd_compare)

    q = sub.add_parser("run-qna", help="solve a chain description file")
    q.add_argument("chain")
    q.add_argument("--out", default="out")
    q.add_argument("--surface", help="comma-separated SCV grid for the delay surface, e.g. 0.2,0.4,0.6,0.8,1")
    q.set_defaults(func=cmd_run_qna)

    t = sub.add_parser("attenuation", help="knife-edge loss of a car and a truck obstacle vs. distance")
    t.add_argument("--out", default="out")
    t.add_argument("--distances", help="comma-separated distances, m")
    t.set_defaults(func=cmd_attenuation)

    r = sub.add_parser("pdr", help="link PDR per data rate for the three class mixes")
    common(r, sweep=False)
    r.add_argument("--reps", type=int, default=200)
    r.set_defaults(func=cmd_pdr)

    w = sub.add_parser("calibrate", help="stability-weight sweep")
    common(w, sweep=False)
    w.add_argument("--reps", type=int, default=200)
    w.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except qna.OverloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
