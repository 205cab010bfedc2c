"""Experiment execution: grid expansion, worker pool, CSV aggregation.

Each sweep cell runs one simulation (attacked plus its adversary-free
twin) and writes two trace CSVs. Graphs are generated once per
(family, param, n, seed) before dispatch and cached as edge-list files,
so concurrent cells share them read-only. The summary is assembled by a
single aggregator in deterministic cell order whatever the worker count.
"""
from __future__ import annotations

import csv
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .config import ExperimentSpec, SweepCell
from .graphs import load_graph, save_graph
from .metrics import compute_aal
from .simulation import SimulationConfig, build_graph, run_simulation, seed_streams

WORKERS_ENV = "DFLSIM_WORKERS"

TRACE_COLUMNS = ("epoch", "run_id", "variant", "avg_honest_test_acc",
                 "n_honest_alive")
SUMMARY_COLUMNS = ("strategy", "graph_family", "params", "n", "n_advs",
                   "seed", "aal")
AGG_COLUMNS = ("strategy", "graph_family", "params", "n", "n_advs",
               "mean_aal", "stderr_aal", "runs")


@dataclass(frozen=True)
class CellOutcome:
    run_id: str
    summary_row: Optional[tuple] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class ExperimentResult:
    output_dir: Path
    n_cells: int
    n_failed: int
    summary_path: Path
    agg_path: Path

    @property
    def all_failed(self) -> bool:
        return self.n_cells > 0 and self.n_failed == self.n_cells


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def graph_cache_key(cfg: SimulationConfig) -> str:
    return f"{cfg.graph_family}{cfg.graph_param:g}_n{cfg.n}_s{cfg.seed}"


def _write_trace(path: Path, run_id: str, variant: str, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for entry in trace:
            writer.writerow([entry.epoch, run_id, variant,
                             repr(entry.accuracy), entry.n_honest_alive])


def run_cell(cell: SweepCell, out_dir: str, graph_path: str) -> CellOutcome:
    """Execute one cell and write its two trace files. Worker-safe."""
    cfg = cell.cfg
    run_id = cell.run_id
    try:
        graph = load_graph(graph_path)
        attacked, baseline = run_simulation(cfg, graph=graph)
        traces = Path(out_dir) / "traces"
        _write_trace(traces / f"{run_id}__attacked.csv", run_id, "attacked",
                     attacked)
        _write_trace(traces / f"{run_id}__baseline.csv", run_id, "baseline",
                     baseline)
        aal = compute_aal(baseline, attacked, cfg.t_attack)
        row = (cfg.strategy, cfg.graph_family, cell.params_label, cfg.n,
               cfg.n_advs, cfg.seed, repr(aal))
        return CellOutcome(run_id=run_id, summary_row=row)
    except Exception as exc:  # cell failures are recorded, not fatal
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        return CellOutcome(run_id=run_id, error=detail)


def _pregenerate_graphs(cells: list[SweepCell], graph_dir: Path
                        ) -> tuple[dict[str, Path], dict[str, str]]:
    """Generate and cache each distinct graph once. Returns the path map
    plus per-key error messages; cells whose graph failed to generate are
    recorded as failures rather than aborting the sweep."""
    paths: dict[str, Path] = {}
    errors: dict[str, str] = {}
    for cell in cells:
        key = graph_cache_key(cell.cfg)
        if key in paths or key in errors:
            continue
        path = graph_dir / f"{key}.txt"
        if not path.exists():
            rng = seed_streams(cell.cfg.seed)["graph"]
            try:
                save_graph(build_graph(cell.cfg, rng), path)
            except Exception as exc:
                errors[key] = "".join(traceback.format_exception_only(
                    type(exc), exc)).strip()
                continue
        paths[key] = path
    return paths, errors


def _aggregate(summary_rows: list[tuple]) -> list[tuple]:
    groups: dict[tuple, list[float]] = {}
    order: list[tuple] = []
    for strategy, family, params, n, n_advs, _seed, aal in summary_rows:
        key = (strategy, family, params, n, n_advs)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(float(aal))
    out = []
    for key in order:
        values = groups[key]
        mean = sum(values) / len(values)
        if len(values) > 1:
            var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
            stderr = math.sqrt(var / len(values))
        else:
            stderr = 0.0
        out.append(key + (repr(mean), repr(stderr), len(values)))
    return out


def run_experiment(spec: ExperimentSpec, output_dir: Optional[str] = None,
                   workers: Optional[int] = None) -> ExperimentResult:
    """Expand the grid, execute every cell, and write trace and summary
    CSVs. Individual cell failures are recorded in failures.csv and
    skipped; the caller decides what a fully-failed run means."""
    out = Path(output_dir or spec.output_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    graph_dir = out / "graphs"
    graph_dir.mkdir(exist_ok=True)

    cells = spec.cells()
    graph_paths, graph_errors = _pregenerate_graphs(cells, graph_dir)
    n_workers = resolve_workers(workers)

    jobs = []
    skipped: dict[int, CellOutcome] = {}
    for idx, cell in enumerate(cells):
        key = graph_cache_key(cell.cfg)
        if key in graph_errors:
            skipped[idx] = CellOutcome(run_id=cell.run_id,
                                       error=graph_errors[key])
        else:
            jobs.append((idx, (cell, str(out), str(graph_paths[key]))))
    if n_workers == 1 or len(jobs) <= 1:
        executed = [run_cell(*job) for _, job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(run_cell, *job) for _, job in jobs]
            executed = [f.result() for f in futures]
    outcomes: list[CellOutcome] = []
    done = iter(executed)
    for idx in range(len(cells)):
        outcomes.append(skipped[idx] if idx in skipped else next(done))

    summary_rows = [o.summary_row for o in outcomes if o.summary_row]
    failures = [(o.run_id, o.error) for o in outcomes if o.error]

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows)
    agg_path = out / "summary_agg.csv"
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGG_COLUMNS)
        writer.writerows(_aggregate(summary_rows))
    if failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("run_id", "error"))
            writer.writerows(failures)

    return ExperimentResult(output_dir=out, n_cells=len(cells),
                            n_failed=len(failures),
                            summary_path=summary_path, agg_path=agg_path)
