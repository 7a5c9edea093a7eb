"""Command-line interface: ``monet tasks | run | analyze | bounds``.

Outputs go under ``--output``, else ``$MONET_OUTPUT_ROOT``, else ``./results``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import coupon_collector
from .benchmarks import BENCHMARKS, get_benchmark
from .experiment import OUTPUT_ROOT_ENV, PRESETS, ExperimentSpec, default_output_root, run_experiment
from .optimizers import ALGORITHMS
from .spaces import BoundedSpace, sample_cvt_tasks, sample_uniform_tasks, save_task_set

log = logging.getLogger("monet")


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"0,2,5"`` or an inclusive range ``"0-4"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _output_root(args) -> Path:
    return Path(args.output) if args.output else default_output_root()


def cmd_tasks(args) -> int:
    if args.benchmark:
        space = get_benchmark(args.benchmark).task_space
        stem = args.benchmark
    else:
        if args.lower is None or args.upper is None:
            raise SystemExit("either --benchmark or both --lower and --upper are required")
        space = BoundedSpace(args.lower, args.upper)
        stem = "custom"
    if args.method == "cvt":
        ts = sample_cvt_tasks(space, args.n, args.oversample, args.lloyd_iters, args.seed)
    else:
        ts = sample_uniform_tasks(space, args.n, args.seed)
    path = Path(args.file) if args.file else _output_root(args) / "tasks" / f"{stem}_{args.method}_n{args.n}_s{args.seed}.csv"
    save_task_set(ts, path)
    print(path)
    return 0


def _build_spec(args) -> ExperimentSpec:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
    overrides = dict(data.get("run_config") or {})
    # command-line flags win over the config file
    for key in ("benchmark", "algorithm", "preset", "task_source", "n_tasks", "task_seed"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.seed is not None:
        data["seeds"] = args.seed
    if args.budget is not None:
        overrides["budget"] = args.budget
    if args.p_ind is not None:
        overrides["p_ind"] = args.p_ind
    if args.neighborhood is not None:
        overrides["neighborhood"] = args.neighborhood
    if args.neighbor_percentage is not None:
        overrides["neighbor_percentage"] = args.neighbor_percentage
    if args.strategy is not None:
        overrides["strategy"] = args.strategy
    if args.k_init is not None:
        overrides["k_init"] = args.k_init
    if overrides:
        data["run_config"] = overrides
    if args.output:
        data["output_dir"] = args.output
    elif "output_dir" not in data:
        data["output_dir"] = str(default_output_root())
    if "benchmark" not in data:
        raise SystemExit("a benchmark is required (--benchmark or the config file)")
    return ExperimentSpec.from_dict(data)


def cmd_run(args) -> int:
    try:
        spec = _build_spec(args)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = run_experiment(spec, workers=args.workers)
    failed = [r for r in manifest["runs"] if r["status"] != "ok"]
    for r in manifest["runs"]:
        if r["status"] == "ok":
            print(f"{spec.label} {spec.benchmark} seed {r['seed']}: final {r['final_mean_fitness']:.4f} auc {r['auc']:.1f}")
        else:
            print(f"{spec.label} {spec.benchmark} seed {r['seed']}: FAILED {r['error']}", file=sys.stderr)
    print(spec.run_dir / "experiment.json")
    return 1 if failed else 0


def cmd_analyze(args) -> int:
    from .report import collect_runs, write_report

    paths = args.paths or [str(_output_root(args))]
    records = collect_runs(paths)
    if not records:
        print("error: no completed runs found under " + ", ".join(paths), file=sys.stderr)
        return 1
    out_dir = Path(args.report_dir) if args.report_dir else _output_root(args) / "report"
    written = write_report(records, out_dir, figures=not args.no_figures)
    sys.stdout.write(written["text"])
    print(f"wrote {written['results']}, {written['comparisons']}, {len(written['figures'])} figures")
    return 0


def bounds_table(nus=(5000, 2000), p: float = 0.99, M: int = 1_000_000) -> list[dict]:
    rows = []
    for nu in nus:
        tab = coupon_collector(nu, p, M, table_compatible=True)
        asym = coupon_collector(nu, p, M)
        rows.append({
            "nu": nu,
            "expected_draws": round(tab.expected_draws),
            "expected_draws_exact": round(asym.expected_draws),
            "high_prob_draws": round(tab.high_prob_draws),
            "high_prob_draws_asymptotic": round(asym.high_prob_draws),
            "expected_visits": round(tab.expected_visits),
        })
    return rows


def cmd_bounds(args) -> int:
    rows = bounds_table(args.nu, args.p, args.budget if args.budget is not None else 1_000_000)
    if args.csv:
        print(",".join(rows[0]))
        for r in rows:
            print(",".join(str(r[k]) for k in r))
        return 0
    print(f"{'nu':>6} {'E[M]':>10} {'E[M] exact':>11} {'M_p (ln 1/(1-p))':>18} {'M_p (-ln(-ln p))':>18} {'E[X_i]':>8}")
    for r in rows:
        print(f"{r['nu']:>6} {r['expected_draws']:>10,} {r['expected_draws_exact']:>11,} {r['high_prob_draws']:>18,} "
              f"{r['high_prob_draws_asymptotic']:>18,} {r['expected_visits']:>8,}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monet", description="Multi-task optimisation over task graphs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output(p):
        p.add_argument("--output", help=f"output root (default: ${OUTPUT_ROOT_ENV} or ./results)")

    p = sub.add_parser("tasks", help="generate a task set and write it as CSV")
    p.add_argument("--benchmark", choices=sorted(BENCHMARKS))
    p.add_argument("--lower", type=float, nargs="+", help="task-space lower bounds (instead of --benchmark)")
    p.add_argument("--upper", type=float, nargs="+")
    p.add_argument("-n", "--n", type=_positive_int, default=5000)
    p.add_argument("--method", choices=("cvt", "uniform"), default="cvt")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oversample", type=_positive_int, default=100_000)
    p.add_argument("--lloyd-iters", type=int, default=50)
    p.add_argument("--file", help="explicit output file")
    add_output(p)
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("run", help="run an experiment over one or more seeds")
    p.add_argument("--config", help="JSON experiment description; flags override its fields")
    p.add_argument("--benchmark", choices=sorted(BENCHMARKS))
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS))
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--task-source", dest="task_source", choices=("cvt", "uniform"))
    p.add_argument("--n-tasks", dest="n_tasks", type=_positive_int)
    p.add_argument("--task-seed", dest="task_seed", type=int)
    p.add_argument("--seed", type=parse_seeds, help="seed list, e.g. 0,1,2 or 0-9")
    p.add_argument("--workers", type=_positive_int, default=None, help="parallel seeds (default: CPU count)")
    p.add_argument("--budget", type=_positive_int, help="fitness evaluations per run")
    p.add_argument("--p-ind", dest="p_ind", type=float)
    p.add_argument("--neighborhood", choices=("closest", "random", "distance_proportional"))
    p.add_argument("--neighbor-percentage", dest="neighbor_percentage", type=float)
    p.add_argument("--strategy", choices=("random", "best_fitness"))
    p.add_argument("--k-init", dest="k_init", type=_positive_int)
    add_output(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="summarise runs: tables, rank tests and figures")
    p.add_argument("paths", nargs="*", help="run directories or manifests (default: output root)")
    p.add_argument("--report-dir", help="where to write the report (default: <output>/report)")
    p.add_argument("--no-figures", action="store_true")
    add_output(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bounds", help="coupon-collector coverage table")
    p.add_argument("--nu", type=_positive_int, nargs="+", default=[5000, 2000])
    p.add_argument("--p", type=float, default=0.99)
    p.add_argument("--budget", type=_positive_int, help="total draws M (default 10^6)")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
