"""Command line interface: ``reyesi {analyze,exact,simulate,weights,plot-data}``.

Exit codes: 0 success, 2 input validation, 3 degenerate statistic,
4 resource cap (exact enumeration).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from io import StringIO

from . import io
from .exceptions import InputError, ReyesError
from .simulation import CovarianceSpec, ScenarioConfig, run_scenario, write_records


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_weights_flags(p):
    src = p.add_argument_group("weights source (edge list or lattice)")
    src.add_argument("--edges", help="CSV edge list with header src,dst")
    src.add_argument("--rows", type=int, help="lattice rows (units in row-major order)")
    src.add_argument("--cols", type=int, help="lattice columns")
    src.add_argument("--contiguity", choices=("queen", "rook"), default="queen")
    src.add_argument("--island-policy", choices=("error", "drop"), default="error")


def _add_analysis_flags(p):
    p.add_argument("compositions", help="CSV with header id,part_1,...,part_D")
    _add_weights_flags(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--zero-replace", choices=("off", "multiplicative"), default="off")
    p.add_argument("--zero-delta", type=float, default=0.5,
                   help="fraction of each column's smallest positive value used for zeros")
    p.add_argument("--correction", choices=("raw", "plus_one"), default="raw")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="reyesi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="statistic, moments and Monte Carlo p-values")
    _add_analysis_flags(p)
    p.add_argument("--permutations", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("exact", help="exact randomization distribution (small n)")
    _add_analysis_flags(p)
    p.add_argument("--cap", type=int, default=9, help="largest n to enumerate")

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("--config", help="scenario JSON (fields of ScenarioConfig)")
    p.add_argument("--case", choices=("identical", "independent", "sar"))
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--D", type=int, dest="D")
    p.add_argument("--contiguity", choices=("queen", "rook"))
    p.add_argument("--covariance", choices=("identity", "exchangeable", "wishart_toeplitz"))
    p.add_argument("--rho", type=float, dest="rho_sar")
    p.add_argument("--replications", type=_positive_int)
    p.add_argument("--permutations", type=_positive_int, dest="B")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=_u64, dest="master_seed")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--no-timing", action="store_true", help="record zero timings (byte-stable output)")
    p.add_argument("--out", help="output prefix; writes <out>.csv and <out>.json")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="what to print when --out is not given")

    p = sub.add_parser("weights", help="build and summarize spatial weights")
    _add_weights_flags(p)
    p.add_argument("--ids", help="compositions CSV whose ids label the units (needed with --edges)")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("plot-data", help="plot-ready CSV series from reports or scenario results")
    p.add_argument("inputs", nargs="*", help="report JSON files, scenario CSVs or scenario summary JSONs")
    p.add_argument("--kind", choices=("daily", "scenario", "rejection"), default="daily")
    p.add_argument("--labels", help="comma-separated day labels for --kind daily")
    p.add_argument("--out", required=True)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_row(report):
    s, pv = report["statistic"], report["p_values"]
    prov = report["provenance"]
    return {
        "i_a": s["value"], "upper_bound": s["upper_bound"], "e_r": s["e_r"], "var_r": s["var_r"],
        "z_score": s["z_score"], "p_pos": pv["p_pos"], "p_neg": pv["p_neg"], "p_two": pv["p_two"],
        "se": pv["se"], "mode": prov["mode"], "B": prov["B"], "seed": prov["seed"],
    }


def _csv_text(rows, columns):
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([io._fmt(row[c]) for c in columns])
    return buf.getvalue()


def _request(args, mode):
    return io.AnalysisRequest(
        compositions_path=args.compositions,
        edges_path=args.edges,
        rows=args.rows,
        cols=args.cols,
        contiguity=args.contiguity,
        B=getattr(args, "permutations", 1),
        seed=getattr(args, "seed", 0),
        alpha=args.alpha,
        zero_replace=args.zero_replace == "multiplicative",
        delta=args.zero_delta,
        island_policy=args.island_policy,
        mode=mode,
        exact_cap=getattr(args, "cap", 9),
        workers=args.workers,
        correction=args.correction,
    )


def cmd_analyze(args, mode="monte_carlo"):
    report, dist = io.run_analysis(_request(args, mode))
    if args.format == "json":
        _emit(io.dumps_report(report), args.out)
    elif mode == "exact":
        rows = [{"rank": k, "value": float(v)} for k, v in enumerate(dist.values)]
        _emit(_csv_text(rows, ("rank", "value")), args.out)
    else:
        row = _report_row(report)
        _emit(_csv_text([row], tuple(row)), args.out)
    return 0


def _scenario_config(args):
    data = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    cov = data.get("covariance", {}) or {}
    if isinstance(cov, str):
        cov = {"kind": cov}
    if args.covariance:
        cov = {**cov, "kind": args.covariance}
    for key in ("case", "D", "contiguity", "rho_sar", "replications", "B", "alpha", "master_seed"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.rows is not None or args.cols is not None:
        rows, cols = data.get("grid", (3, 3))
        data["grid"] = [args.rows or rows, args.cols or cols]
    cov.pop("dim", None)
    data["covariance"] = cov
    return ScenarioConfig.from_dict(data)


def cmd_simulate(args):
    config = _scenario_config(args)
    result = run_scenario(config, workers=args.workers, record_timing=not args.no_timing)
    summary = io.dumps_report(result.summary())
    if args.out:
        result.to_csv(f"{args.out}.csv")
        _emit(summary, f"{args.out}.json")
    elif args.format == "csv":
        write_records(sys.stdout, result.records)
    else:
        sys.stdout.write(summary)
    return 0


def cmd_weights(args):
    if args.edges:
        if not args.ids:
            raise InputError("--edges needs --ids to label the units")
        ids = io.read_compositions(args.ids).ids
        w = io.build_weights(ids, edges_path=args.edges, island_policy=args.island_policy)
    else:
        if args.rows is None or args.cols is None:
            raise InputError("give --edges with --ids, or --rows and --cols")
        ids = list(range(args.rows * args.cols))
        w = io.build_weights(ids, rows=args.rows, cols=args.cols, contiguity=args.contiguity,
                             island_policy=args.island_policy)
    if args.format == "csv":
        rows, cols, vals = w.edges()
        out = [{"src": str(w.ids[i]), "dst": str(w.ids[j]), "weight": float(v)} for i, j, v in zip(rows, cols, vals)]
        _emit(_csv_text(out, ("src", "dst", "weight")), args.out)
    else:
        from .weights import weight_summaries

        summ = weight_summaries(w)
        report = {
            "n": w.n,
            "nnz": w.nnz,
            "s0": summ.s0,
            "standardized": w.standardized,
            "symmetric_structure": w.is_symmetric_structure(),
            "cardinalities": {str(uid): int(c) for uid, c in zip(w.ids, w.cardinalities)},
            "dropped_units": [str(u) for u in w.meta.get("dropped_units", [])],
            "meta": {k: v for k, v in w.meta.items() if k != "dropped_units"},
        }
        _emit(io.dumps_report(report), args.out)
    return 0


def cmd_plot_data(args):
    if args.kind == "daily":
        reports = []
        for path in args.inputs:
            with open(path, encoding="utf-8") as fh:
                reports.append(json.load(fh))
        labels = args.labels.split(",") if args.labels else [os.path.splitext(os.path.basename(p))[0] for p in args.inputs]
        if len(labels) != len(reports):
            raise InputError(f"{len(labels)} labels for {len(reports)} reports")
        rows = io.daily_series(reports, labels)
    elif args.kind == "scenario":
        rows = []
        for path in args.inputs:
            rows.extend(io.scenario_series(io.read_records(path)))
    else:
        summaries = []
        for path in args.inputs:
            with open(path, encoding="utf-8") as fh:
                summaries.append(json.load(fh))
        rows = io.rejection_series(summaries)
    io.write_series(rows, args.kind, args.out)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "exact": lambda a: cmd_analyze(a, "exact"),
    "simulate": cmd_simulate,
    "weights": cmd_weights,
    "plot-data": cmd_plot_data,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ReyesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code != 1 else 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
