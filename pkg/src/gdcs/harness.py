"""Seeded Monte Carlo experiment runner.

A trial draws a random correlation structure (sensor groups of configured
sizes), an ensemble, and measurement matrices, recovers with one method, and
scores the relative error against the ground truth.  Seeds derive from the
master seed through ``numpy.random.SeedSequence([master, method_id, M,
trial])``, so every (method, M, trial) triple gets an independent stream and
adding a method never perturbs the others.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .l1solver import SolverSettings
from .model import CorrelationStructure, SignalEnsemble, build_structure, generate_ensemble
from .search import RECOVERY_MODES, RecoveryResult, recover
from .sensing import draw_measurement_matrices, compress

METHOD_IDS = {name: i + 1 for i, name in enumerate(RECOVERY_MODES)}


class NotBracketed(ValueError):
    """A success curve does not cross the requested level inside the sweep."""


@dataclass(frozen=True)
class PartialSpec:
    """A partial common group drawn per trial: its size and sparsity."""

    size: int
    sparsity: int


@dataclass(frozen=True)
class ExperimentConfig:
    signal_length: int = 50
    num_sensors: int = 9
    full_common_sparsity: int = 0
    partials: tuple[PartialSpec, ...] = ()
    innovation_sparsity: int = 4
    sweep: tuple[int, ...] = ()
    trials: int = 100
    methods: tuple[str, ...] = ("separate", "dcs", "gdcs-oracle", "gdcs-search")
    solver: SolverSettings = SolverSettings()
    resolution: float = 0.1
    master_seed: int = 0
    timing: bool = True

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("success resolution must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial per point")
        if not self.sweep:
            raise ValueError("measurement sweep may not be empty")
        if list(self.sweep) != sorted(set(self.sweep)):
            raise ValueError("sweep must be strictly increasing")
        for m in self.methods:
            if m not in RECOVERY_MODES:
                raise ValueError(f"unknown method {m!r}")


@dataclass(frozen=True)
class TrialResult:
    method: str
    measurements: int
    trial: int
    relative_error: float
    success: bool
    seconds: float
    converged: bool
    discovered: tuple[tuple[int, ...], ...] = ()


def trial_rng(config: ExperimentConfig, method: str, measurements: int, trial: int) -> np.random.Generator:
    seq = np.random.SeedSequence(
        [int(config.master_seed), METHOD_IDS[method], int(measurements), int(trial)]
    )
    return np.random.default_rng(seq)


def draw_structure(config: ExperimentConfig, rng: np.random.Generator) -> CorrelationStructure:
    """Draw the per-trial correlation structure: partial groups get random
    distinct sensor sets of the configured sizes."""
    j_count = config.num_sensors
    sets: list[tuple[int, ...]] = []
    for spec in config.partials:
        if not 1 < spec.size < j_count:
            raise ValueError(f"partial group size {spec.size} invalid for {j_count} sensors")
        while True:
            s = tuple(sorted(rng.choice(j_count, size=spec.size, replace=False).tolist()))
            if s not in sets:
                sets.append(s)
                break
    return build_structure(
        j_count,
        config.signal_length,
        sets,
        include_full_common=config.full_common_sparsity > 0,
    )


def draw_ensemble(
    config: ExperimentConfig, structure: CorrelationStructure, rng: np.random.Generator
) -> SignalEnsemble:
    sparsities = []
    partial_iter = iter(config.partials)
    for comp in structure.components:
        if comp.kind == "full-common":
            sparsities.append(config.full_common_sparsity)
        elif comp.kind == "partial-common":
            sparsities.append(next(partial_iter).sparsity)
        else:
            sparsities.append(config.innovation_sparsity)
    return generate_ensemble(structure, sparsities, rng)


def run_trial(config: ExperimentConfig, method: str, measurements: int, trial: int) -> TrialResult:
    """One deterministic trial: structure, ensemble, matrices, recovery.

    Recovery trouble (no measurements, a solver that did not converge) is
    recorded as an unsuccessful trial rather than raised.
    """
    if measurements < 1:
        return TrialResult(method, measurements, trial, float("inf"), False, 0.0, False, ())
    rng = trial_rng(config, method, measurements, trial)
    structure = draw_structure(config, rng)
    ensemble = draw_ensemble(config, structure, rng)
    matrices = draw_measurement_matrices(
        config.signal_length, [measurements] * config.num_sensors, rng
    )
    observed = compress(ensemble, matrices)
    start = time.perf_counter()
    result: RecoveryResult = recover(
        method,
        observed,
        matrices,
        settings=config.solver,
        structure=structure,
        truth=ensemble.signals,
    )
    elapsed = time.perf_counter() - start
    error = result.relative_error if result.relative_error is not None else float("inf")
    success = bool(result.converged and error < config.resolution)
    return TrialResult(
        method=method,
        measurements=measurements,
        trial=trial,
        relative_error=float(error),
        success=success,
        seconds=elapsed if config.timing else 0.0,
        converged=result.converged,
        discovered=result.structure_sets,
    )


@dataclass(frozen=True)
class CurveRow:
    method: str
    measurements: int
    trials: int
    successes: int
    mean_error: float
    mean_seconds: float

    @property
    def success_prob(self) -> float:
        return self.successes / self.trials


@dataclass(frozen=True)
class CurveTable:
    rows: tuple[CurveRow, ...]

    def curve(self, method: str) -> list[tuple[int, float]]:
        pts = [(r.measurements, r.success_prob) for r in self.rows if r.method == method]
        if not pts:
            raise KeyError(f"no rows for method {method!r}")
        return sorted(pts)

    def row(self, method: str, measurements: int) -> CurveRow:
        for r in self.rows:
            if r.method == method and r.measurements == measurements:
                return r
        raise KeyError(f"no row for ({method}, {measurements})")


def aggregate(results: Iterable[TrialResult]) -> CurveTable:
    """Exact aggregation of trial results into one row per (method, M)."""
    grouped: dict[tuple[str, int], list[TrialResult]] = {}
    for tr in results:
        grouped.setdefault((tr.method, tr.measurements), []).append(tr)
    rows = []
    for (method, m), trs in sorted(
        grouped.items(), key=lambda kv: (METHOD_IDS[kv[0][0]], kv[0][1])
    ):
        trs.sort(key=lambda tr: tr.trial)
        successes = sum(tr.success for tr in trs)
        rows.append(
            CurveRow(
                method=method,
                measurements=m,
                trials=len(trs),
                successes=successes,
                mean_error=float(np.mean([tr.relative_error for tr in trs])),
                mean_seconds=float(np.mean([tr.seconds for tr in trs])),
            )
        )
    return CurveTable(tuple(rows))


def _run_one(args: tuple[ExperimentConfig, str, int, int]) -> TrialResult:
    return run_trial(*args)


def run_sweep(
    config: ExperimentConfig,
    workers: int | None = None,
    progress: bool = False,
) -> tuple[CurveTable, list[TrialResult]]:
    """Run the full methods x sweep x trials grid.

    Trials are independent and may run in parallel; results are merged by
    (method, M, trial) key so the outcome does not depend on scheduling.
    """
    tasks = [
        (config, method, m, t)
        for method in config.methods
        for m in config.sweep
        for t in range(config.trials)
    ]
    results: list[TrialResult] = []
    if workers is None:
        workers = 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, tr in enumerate(pool.map(_run_one, tasks, chunksize=4)):
                results.append(tr)
                if progress and (i + 1) % 50 == 0:
                    print(f"  {i + 1}/{len(tasks)} trials done", flush=True)
    else:
        for i, task in enumerate(tasks):
            results.append(_run_one(task))
            if progress and (i + 1) % 50 == 0:
                print(f"  {i + 1}/{len(tasks)} trials done", flush=True)
    results.sort(key=lambda tr: (METHOD_IDS[tr.method], tr.measurements, tr.trial))
    return aggregate(results), results


def crossing_point(curve: Sequence[tuple[int, float]], level: float) -> float:
    """Measurement count where a success curve first reaches ``level``,
    linearly interpolated between the bracketing sweep points."""
    for (m0, p0), (m1, p1) in zip(curve, curve[1:]):
        if p0 < level <= p1:
            return m0 + (level - p0) * (m1 - m0) / (p1 - p0)
    raise NotBracketed(f"curve does not cross level {level} inside the sweep")


def measurement_savings(
    table: CurveTable, method_a: str, method_b: str, level: float
) -> float:
    """Measurements saved by ``method_b`` over ``method_a`` at a success
    level: the difference of their interpolated crossing points."""
    return crossing_point(table.curve(method_a), level) - crossing_point(
        table.curve(method_b), level
    )


CSV_HEADER = ["method", "M", "trials", "success_prob", "mean_error", "mean_seconds"]


def write_curve_csv(table: CurveTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in table.rows:
            writer.writerow(
                [r.method, r.measurements, r.trials, repr(r.success_prob),
                 repr(r.mean_error), repr(r.mean_seconds)]
            )


def read_curve_csv(path: str | Path) -> CurveTable:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            method, m, trials, prob, err, secs = rec
            trials = int(trials)
            successes = round(float(prob) * trials)
            rows.append(
                CurveRow(method, int(m), trials, successes, float(err), float(secs))
            )
    return CurveTable(tuple(rows))


def write_success_plot(table: CurveTable, path: str | Path) -> None:
    """Success probability vs measurements, one series per method, as a
    self-contained vector graphic."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    markers = {"separate": "s", "dcs": "o", "gdcs-oracle": "^", "gdcs-search": "d"}
    methods = []
    for r in table.rows:
        if r.method not in methods:
            methods.append(r.method)
    for method in methods:
        pts = table.curve(method)
        ax.plot(
            [m for m, _ in pts],
            [p for _, p in pts],
            marker=markers.get(method, "x"),
            label=method,
        )
    ax.set_xlabel("measurements per sensor")
    ax.set_ylabel("success probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.4)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format=Path(path).suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    solver = config.solver
    return {
        "signal_length": config.signal_length,
        "num_sensors": config.num_sensors,
        "full_common_sparsity": config.full_common_sparsity,
        "partials": [{"size": p.size, "sparsity": p.sparsity} for p in config.partials],
        "innovation_sparsity": config.innovation_sparsity,
        "sweep": list(config.sweep),
        "trials": config.trials,
        "methods": list(config.methods),
        "resolution": config.resolution,
        "master_seed": config.master_seed,
        "timing": config.timing,
        "solver": {
            "primal_tol": solver.primal_tol,
            "dual_tol": solver.dual_tol,
            "max_iter": solver.max_iter,
            "reweight_eps": solver.reweight_eps,
            "reweight_rounds": solver.reweight_rounds,
            "zero_tol": solver.zero_tol,
            "step": solver.step,
            "relaxation": solver.relaxation,
            "inner_tol": solver.inner_tol,
            "check_every": solver.check_every,
            "adapt_iters": solver.adapt_iters,
        },
    }


def config_from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    solver = SolverSettings(**doc.get("solver", {}))
    return ExperimentConfig(
        signal_length=int(doc.get("signal_length", 50)),
        num_sensors=int(doc.get("num_sensors", 9)),
        full_common_sparsity=int(doc.get("full_common_sparsity", 0)),
        partials=tuple(
            PartialSpec(int(p["size"]), int(p["sparsity"])) for p in doc.get("partials", [])
        ),
        innovation_sparsity=int(doc.get("innovation_sparsity", 4)),
        sweep=tuple(int(m) for m in doc.get("sweep", [])),
        trials=int(doc.get("trials", 100)),
        methods=tuple(doc.get("methods", list(RECOVERY_MODES))),
        solver=solver,
        resolution=float(doc.get("resolution", 0.1)),
        master_seed=int(doc.get("master_seed", 0)),
        timing=bool(doc.get("timing", True)),
    )
