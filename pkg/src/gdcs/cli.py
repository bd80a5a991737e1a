"""Command line interface.

Subcommands: ``gen`` (write an ensemble fixture), ``sense`` (measure a
fixture), ``bound`` (feasibility table for a measurement tuple), ``recover``
(single-instance recovery in any mode), ``experiment`` (Monte Carlo sweep
from a config file), ``plot`` (curve CSV to vector plot).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# keep BLAS single threaded: trials parallelize across processes, and
# oversubscribed BLAS pools slow the small per-trial solves down
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np

from . import bounds, fixtures, harness
from .l1solver import SolverSettings
from .model import build_structure, generate_ensemble
from .search import RECOVERY_MODES, recover
from .sensing import MeasurementSet, compress, draw_measurement_matrices


def _parse_sensor_sets(text: str) -> list[tuple[int, ...]]:
    """Parse partial sets like ``0,1;1,2;0,2`` (0-based sensor indices)."""
    sets = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            sets.append(tuple(int(j) for j in part.split(",")))
    return sets


def _solver_from_args(args) -> SolverSettings:
    kwargs = {}
    for name in ("primal_tol", "dual_tol", "max_iter", "reweight_eps",
                 "reweight_rounds", "zero_tol", "inner_tol"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return SolverSettings(**kwargs)


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--primal-tol", dest="primal_tol", type=float)
    parser.add_argument("--dual-tol", dest="dual_tol", type=float)
    parser.add_argument("--max-iter", dest="max_iter", type=int)
    parser.add_argument("--reweight-eps", dest="reweight_eps", type=float)
    parser.add_argument("--reweight-rounds", dest="reweight_rounds", type=int)
    parser.add_argument("--zero-tol", dest="zero_tol", type=float)
    parser.add_argument("--inner-tol", dest="inner_tol", type=float)


def cmd_gen(args) -> int:
    structure = build_structure(
        args.sensors,
        args.length,
        _parse_sensor_sets(args.partial_sets or ""),
        include_full_common=args.full_common_sparsity > 0,
    )
    sparsities = []
    partial_iter = iter(args.partial_sparsity or [])
    for comp in structure.components:
        if comp.kind == "full-common":
            sparsities.append(args.full_common_sparsity)
        elif comp.kind == "partial-common":
            try:
                sparsities.append(next(partial_iter))
            except StopIteration:
                raise SystemExit("need one --partial-sparsity per partial set")
        else:
            sparsities.append(args.innovation_sparsity)
    rng = np.random.default_rng(args.seed)
    ensemble = generate_ensemble(structure, sparsities, rng)
    fixtures.save_ensemble(ensemble, args.output)
    print(f"wrote ensemble fixture to {args.output} "
          f"(J={args.sensors}, N={args.length}, {len(structure.components)} components)")
    return 0


def cmd_sense(args) -> int:
    ensemble = fixtures.load_ensemble(args.ensemble)
    j_count = ensemble.structure.num_sensors
    counts = args.measurements
    ms = counts if len(counts) == j_count else [counts[0]] * j_count
    rng = np.random.default_rng(args.seed)
    matrices = draw_measurement_matrices(ensemble.structure.signal_length, ms, rng)
    measurement_set = MeasurementSet(tuple(matrices), compress(ensemble, matrices))
    fixtures.save_measurements(measurement_set, args.output)
    print(f"wrote measurement fixture to {args.output} (M={tuple(ms)})")
    return 0


def cmd_bound(args) -> int:
    ensemble = fixtures.load_ensemble(args.ensemble)
    profile = bounds.SupportProfile.from_ensemble(ensemble)
    j_count = ensemble.structure.num_sensors
    if args.measurements:
        counts = args.measurements
        ms = counts if len(counts) == j_count else [counts[0]] * j_count
    else:
        m_star = bounds.min_uniform_measurement(profile, args.unknown_support)
        print(f"minimal uniform per-sensor measurement count: {m_star}")
        ms = [m_star] * j_count
    report = bounds.check_measurement_tuple(ms, profile, args.unknown_support)
    print(f"tuple M={tuple(ms)}: {'feasible' if report.feasible else 'INFEASIBLE'}")
    print("subset,required,available,satisfied")
    for row in report.table:
        subset = "{" + " ".join(map(str, row.sensors)) + "}"
        print(f"{subset},{row.required},{row.available},{str(row.satisfied).lower()}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("subset,required,available,satisfied\n")
            for row in report.table:
                subset = "{" + " ".join(map(str, row.sensors)) + "}"
                fh.write(f"{subset},{row.required},{row.available},{str(row.satisfied).lower()}\n")
        print(f"wrote subset table to {args.csv}")
    return 0 if report.feasible else 1


def cmd_recover(args) -> int:
    measurement_set = fixtures.load_measurements(args.measurements)
    ensemble = fixtures.load_ensemble(args.ensemble) if args.ensemble else None
    settings = _solver_from_args(args)
    result = recover(
        args.mode,
        measurement_set.observed,
        measurement_set.matrices,
        settings=settings,
        structure=ensemble.structure if ensemble else None,
        truth=ensemble.signals if ensemble else None,
    )
    doc = {
        "mode": args.mode,
        "converged": result.converged,
        "iterations": result.iterations,
        "relative_error": result.relative_error,
        "structure_sets": [list(s) for s in result.structure_sets],
        "betas": list(result.betas),
        "alpha_history": [list(a) for a in result.alpha_history],
        "search_aborted": result.search_aborted,
        "signals": result.signals.tolist(),
    }
    if args.output:
        fixtures.write_json(doc, args.output)
        print(f"wrote recovery result to {args.output}")
    summary = {k: doc[k] for k in
               ("mode", "converged", "iterations", "relative_error", "structure_sets", "betas")}
    print(json.dumps(summary, indent=1))
    return 0


def cmd_experiment(args) -> int:
    doc = fixtures.read_json(args.config)
    config = harness.config_from_dict(doc)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.methods:
        overrides["methods"] = tuple(args.methods)
    if args.sweep:
        overrides["sweep"] = tuple(args.sweep)
    overrides["master_seed"] = args.seed
    if args.no_timing:
        overrides["timing"] = False
    from dataclasses import replace

    config = replace(config, **overrides)
    table, _ = harness.run_sweep(config, workers=args.workers, progress=not args.quiet)
    harness.write_curve_csv(table, args.output)
    print(f"wrote curve table to {args.output}")
    if args.plot:
        harness.write_success_plot(table, args.plot)
        print(f"wrote plot to {args.plot}")
    return 0


def cmd_plot(args) -> int:
    table = harness.read_curve_csv(args.csv)
    harness.write_success_plot(table, args.output)
    print(f"wrote plot to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdcs",
        description="joint-sparse ensembles: generation, measurement bounds, "
        "joint recovery, and Monte Carlo experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random ensemble fixture")
    p.add_argument("--sensors", "-J", type=int, required=True)
    p.add_argument("--length", "-N", type=int, required=True)
    p.add_argument("--partial-sets", help="semicolon-separated sensor lists, e.g. '0,1;1,2'")
    p.add_argument("--full-common-sparsity", type=int, default=0)
    p.add_argument("--partial-sparsity", type=int, action="append",
                   help="one per partial set, in order")
    p.add_argument("--innovation-sparsity", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sense", help="draw matrices and measure an ensemble fixture")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--measurements", "-M", type=int, nargs="+", required=True,
                   help="per-sensor counts, or one value for all sensors")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("bound", help="per-subset feasibility table for an ensemble")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--measurements", "-M", type=int, nargs="*",
                   help="tuple to check; omitted: search the minimal uniform count")
    p.add_argument("--unknown-support", action="store_true",
                   help="add the subset-size margin for unknown support layouts")
    p.add_argument("--csv", help="also write the table to this path")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("recover", help="recover one instance from a measurement fixture")
    p.add_argument("--measurements", required=True, help="measurement fixture path")
    p.add_argument("--ensemble", help="ensemble fixture for ground truth / oracle mode")
    p.add_argument("--mode", choices=RECOVERY_MODES, required=True)
    p.add_argument("--output", "-o", help="write the full result (with signals) here")
    _add_solver_args(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("experiment", help="run a Monte Carlo sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", "-o", required=True, help="curve CSV path")
    p.add_argument("--plot", help="also write a success plot here")
    p.add_argument("--trials", type=int)
    p.add_argument("--methods", nargs="+", choices=RECOVERY_MODES)
    p.add_argument("--sweep", type=int, nargs="+")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="record zero wall-clock for byte-reproducible CSVs")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot", help="render a curve CSV as a vector plot")
    p.add_argument("--csv", required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
