"""Command-line entry point.

Verbs: `run <config>`, `plot <csv...> --kind <k> -o <svg>`,
`verify-lemma <config>`, `complexity-probe --sizes ...`, `presets list`.
Exit codes: 0 success, 1 total failure, 2 config error. The worker count
for sweeps comes from --workers or the DFLSIM_WORKERS environment
variable.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, parse_config, parse_config_data
from .plots import PlotError, plot_csv
from .presets import PRESETS
from .sweep import run_experiment
from .theory import BoundResult, complexity_probe, default_scenario_grid, verify_lower_bound

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _cmd_run(args) -> int:
    try:
        if args.config in PRESETS:
            spec = PRESETS[args.config]
        else:
            spec = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_experiment(spec, output_dir=args.output,
                            workers=args.workers)
    done = result.n_cells - result.n_failed
    print(f"{spec.name}: {done}/{result.n_cells} cells completed; "
          f"summary at {result.summary_path}")
    if result.n_failed:
        print(f"{result.n_failed} cells failed; see "
              f"{result.output_dir / 'failures.csv'}", file=sys.stderr)
    return EXIT_FAILURE if result.all_failed else EXIT_OK


def _cmd_plot(args) -> int:
    try:
        plot_csv(args.csv, args.kind, args.output)
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {args.output}")
    return EXIT_OK


def _lemma_grid_from_config(path: str):
    """Lemma-verification config: optional YAML with grid overrides."""
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"could not read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("lemma config must be a mapping")
    allowed = {"n_advs", "delta_min", "horizon", "alpha", "dim", "trials",
               "data_seed", "rng_seed"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in lemma config: {sorted(unknown)}")
    grid = default_scenario_grid(
        n_advs_values=tuple(raw.get("n_advs", (1, 2, 3))),
        delta_values=tuple(raw.get("delta_min", (0.5, 1.0, 2.0))),
        horizon=int(raw.get("horizon", 20)),
        alpha=float(raw.get("alpha", 0.05)),
        dim=int(raw.get("dim", 2)),
        data_seed=int(raw.get("data_seed", 0)))
    return grid, int(raw.get("trials", 200)), int(raw.get("rng_seed", 0))


def _write_bound_report(rows: list[BoundResult], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("scenario_id", "n", "d", "n_advs", "delta_min",
                         "alpha", "T", "trials", "lhs", "rhs", "margin",
                         "stderr", "pass"))
        for r in rows:
            writer.writerow((r.scenario_id, r.n, r.d, r.n_advs,
                             repr(r.delta_min), repr(r.alpha), r.horizon,
                             r.trials, repr(r.lhs), repr(r.rhs),
                             repr(r.margin), repr(r.stderr),
                             str(r.passed).lower()))


def _cmd_verify_lemma(args) -> int:
    try:
        grid, trials, rng_seed = _lemma_grid_from_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = verify_lower_bound(grid, trials, np.random.default_rng(rng_seed))
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.scenario_id:20s} lhs={r.lhs:10.4f} rhs={r.rhs:10.4f} "
              f"margin={r.margin:10.4f} stderr={r.stderr:.5f} {status}")
    if args.output:
        _write_bound_report(rows, Path(args.output))
        print(f"wrote {args.output}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAILURE


def _cmd_complexity_probe(args) -> int:
    report = complexity_probe(args.sizes, n_adv_fraction=args.fraction,
                              repeats=args.repeats, seed=args.seed)
    for row in report.rows:
        print(f"n={row.n:6d} median={row.median_seconds * 1e3:9.2f} ms "
              f"cv={row.cv:.2f}")
    print(f"log-log slope: {report.loglog_slope:.3f}")
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action != "list":
        print(f"unknown presets action {args.action!r}", file=sys.stderr)
        return EXIT_CONFIG
    for name, spec in sorted(PRESETS.items()):
        print(f"{name:20s} {len(spec.cells()):5d} cells  "
              f"family={spec.graph_family}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dflsim",
        description="Placement-attack experiments on decentralized "
                    "federated learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", help="path to a YAML config, or a preset name")
    p_run.add_argument("-o", "--output", default=None,
                       help="override the output directory")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker processes (default $DFLSIM_WORKERS or 1)")
    p_run.set_defaults(func=_cmd_run)

    p_plot = sub.add_parser("plot", help="render a CSV to SVG")
    p_plot.add_argument("csv", nargs="+", help="trace or summary CSV files")
    p_plot.add_argument("--kind", required=True,
                        choices=("accuracy-vs-epoch", "aal-bars"))
    p_plot.add_argument("-o", "--output", required=True, help="output SVG path")
    p_plot.set_defaults(func=_cmd_plot)

    p_lemma = sub.add_parser("verify-lemma",
                             help="numerically check the impact lower bound")
    p_lemma.add_argument("config", nargs="?", default=None,
                         help="optional YAML overriding the default grid")
    p_lemma.add_argument("-o", "--output", default=None,
                         help="write the report CSV here")
    p_lemma.set_defaults(func=_cmd_verify_lemma)

    p_probe = sub.add_parser("complexity-probe",
                             help="time the greedy placement across sizes")
    p_probe.add_argument("--sizes", type=int, nargs="+",
                         default=[50, 100, 200, 400])
    p_probe.add_argument("--fraction", type=float, default=0.1)
    p_probe.add_argument("--repeats", type=int, default=5)
    p_probe.add_argument("--seed", type=int, default=0)
    p_probe.set_defaults(func=_cmd_complexity_probe)

    p_presets = sub.add_parser("presets", help="inspect built-in presets")
    p_presets.add_argument("action", choices=("list",))
    p_presets.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
