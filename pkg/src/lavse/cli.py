"""Command-line front end.

Subcommands: estimate, detect, ps, build, mc, reproduce.  Exit codes:
0 success, 2 parse/usage error, 3 numerical precondition failure,
4 reproduction mismatch, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import experiments
from .errors import (
    DegenerateBasis,
    DimensionMismatch,
    DisconnectedBus,
    EmptyPartition,
    InvalidArgument,
    LavseError,
    NonFinite,
    ParseError,
    RankDeficient,
    TooLarge,
    UnknownLabel,
    UnsupportedKind,
)
from .lav import solve_lav
from .leverage import detect_all, detect_partitioned, load_partitions
from .model import format_matrix_csv, load_model, model_to_dict
from .power import FIXTURES, build_dc_model, build_pmu_model, fixture_network, load_network
from .projstats import compute_ps

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_MISMATCH = 4
EXIT_INTERNAL = 5

_NUMERIC_ERRORS = (RankDeficient, DegenerateBasis, DisconnectedBus, EmptyPartition,
                   TooLarge, NonFinite, DimensionMismatch, UnsupportedKind,
                   UnknownLabel, InvalidArgument)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def cmd_estimate(args) -> int:
    model = load_model(args.model)
    sol = solve_lav(model, zero_tol=args.zero_tol)
    if args.format == "json":
        doc = {
            "theta_hat": [float(x) for x in sol.theta_hat],
            "residuals": [float(x) for x in sol.residuals],
            "objective": sol.objective,
            "zero_set": list(sol.zero_set),
            "degenerate": sol.degenerate,
            "iterations": sol.iterations,
        }
        _emit(_dump_json(doc), args.output)
        return EXIT_OK
    lines = ["states: " + "  ".join(_fmt(x) for x in sol.theta_hat)]
    lines.append(f"objective: {_fmt(sol.objective)}")
    width = max(len(s) for s in model.labels)
    lines.append(f"{'measurement':<{width}}  {'residual':>12}  zero")
    for i, lab in enumerate(model.labels):
        z = "yes" if i in sol.zero_set else "no"
        lines.append(f"{lab:<{width}}  {sol.residuals[i]:>12.4g}  {z}")
    lines.append(f"degenerate (multiple optima): {sol.degenerate}")
    _emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_detect(args) -> int:
    model = load_model(args.model)
    if args.partitions:
        parts = load_partitions(args.partitions, model)
        report = detect_partitioned(model, parts, budget=args.budget,
                                    boundary_tol=args.boundary_tol,
                                    strict_margin=args.strict_margin,
                                    threads=args.threads)
    else:
        report = detect_all(model, budget=args.budget,
                            boundary_tol=args.boundary_tol,
                            strict_margin=args.strict_margin,
                            early_exit=not args.exhaustive,
                            threads=args.threads)
    if args.format == "json":
        _emit(_dump_json(report.to_dict()), args.output)
    else:
        _emit(report.render_table(), args.output)
    return EXIT_OK


def cmd_ps(args) -> int:
    model = load_model(args.model)
    report = compute_ps(model)
    if args.format == "json":
        _emit(_dump_json(report.to_dict()), args.output)
    else:
        _emit(report.render_table(model.labels), args.output)
    return EXIT_OK


def _load_network_arg(name: str):
    if name in FIXTURES and not Path(name).exists():
        return fixture_network(name)
    return load_network(name)


def cmd_build(args) -> int:
    net = _load_network_arg(args.network)
    builder = build_dc_model if args.model == "dc" else build_pmu_model
    model = builder(net)
    if args.format == "json":
        _emit(_dump_json(model_to_dict(model)), args.output)
    elif args.format == "csv":
        _emit(format_matrix_csv(model.h), args.output)
    else:
        width = max(len(s) for s in model.labels)
        lines = [f"{model.m} measurements x {model.n} states"]
        if model.state_labels:
            lines.append(f"{'':<{width}}  " + "  ".join(f"{s:>10}" for s in model.state_labels))
        for i, lab in enumerate(model.labels):
            lines.append(f"{lab:<{width}}  " + "  ".join(f"{x:>10.4g}" for x in model.h[i]))
        _emit("\n".join(lines), args.output)
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = experiments.MCConfig(
        trials=args.trials, seed=args.seed,
        row_variance=args.row_variance, state_variance=args.state_variance,
        gross_error=args.gross_error, boundary_band=args.boundary_band,
        deviation_tol=args.deviation_tol,
    )
    records = experiments.run_monte_carlo(None, cfg, csv_path=args.out)
    agreement = experiments.agreement_rate(records)
    flagged = sum(r.detector_flagged for r in records if not r.skipped)
    deviated = sum(r.lav_deviated for r in records if not r.skipped)
    print(f"trials={cfg.trials} flagged={flagged} deviated={deviated} "
          f"agreement_outside_band={agreement:.4f}")
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.target == "table4":
        result = experiments.reproduce_table4()
        print(result.render())
    elif args.target == "table2":
        result = experiments.reproduce_table2()
        print(result.render())
    elif args.target == "table1":
        model = experiments.fixture_model("ieee14-dc")
        parts = None
        if args.partitions:
            parts = load_partitions(args.partitions, model)
        result = experiments.reproduce_table1(model, parts)
        print(result.render())
    else:
        result = experiments.reproduce_mc(trials=args.trials, seed=args.seed,
                                          csv_path=args.out)
        print(result.render())
    return EXIT_OK if result.passed else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lavse",
        description="Absolute-value state estimation and leverage-point diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=["table", "json", "csv"], default="table")
        p.add_argument("--output", help="write to a file instead of stdout")

    p = sub.add_parser("estimate", help="solve the absolute-value fit of a model file")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--zero-tol", type=float, default=1e-8)
    add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("detect", help="classify rows as leverage/boundary/clean")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--partitions", help="partition JSON file")
    p.add_argument("--budget", type=int, help="max bases per row")
    p.add_argument("--boundary-tol", type=float, default=1e-9)
    p.add_argument("--strict-margin", type=float, default=1e-6)
    p.add_argument("--exhaustive", action="store_true", help="disable early exit")
    p.add_argument("--threads", type=int, default=os.cpu_count())
    add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("ps", help="projection-statistics baseline")
    p.add_argument("model", help="model JSON file")
    add_common(p)
    p.set_defaults(func=cmd_ps)

    p = sub.add_parser("build", help="build a measurement model from a network")
    p.add_argument("network", help=f"network JSON file or fixture name ({', '.join(FIXTURES)})")
    p.add_argument("--model", choices=["dc", "pmu"], required=True)
    add_common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("mc", help="random extra-row study on the 3-bus model")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--row-variance", type=float, default=30.0)
    p.add_argument("--state-variance", type=float, default=1.0)
    p.add_argument("--gross-error", type=float, default=10.0)
    p.add_argument("--boundary-band", type=float, default=0.05)
    p.add_argument("--deviation-tol", type=float, default=0.1)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("reproduce", help="check bundled reference results")
    p.add_argument("target", choices=["table1", "table2", "table4", "mc"])
    p.add_argument("--partitions", help="partition JSON file (table1 only)")
    p.add_argument("--trials", type=int, default=2000, help="mc only")
    p.add_argument("--seed", type=int, default=20260809, help="mc only")
    p.add_argument("--out", help="CSV output path (mc only)")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as err:
        print(f"parse error: line {err.lineno}, column {err.colno}: {err.msg}", file=sys.stderr)
        return EXIT_PARSE
    except (ParseError, FileNotFoundError) as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except _NUMERIC_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except LavseError as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
