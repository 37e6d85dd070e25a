"""Command-line interface: price, table, convergence, selftest."""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_experiments
from .errors import LtBarrierError
from .harness import (ExperimentConfig, convergence_alpha, run_methods,
                      variance_ratio_table, write_csv)

SUMMARY_COLUMNS = ["config", "method", "mean", "stderr", "n", "shifts",
                   "wasted_fraction"]
TABLE_COLUMNS = ["config", "method", "sigma", "ratio_pct"]
CONVERGENCE_COLUMNS = ["config", "method", "n", "mean", "sigma"]


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("LTBARRIER_THREADS", "1"))


def _load(args) -> list[ExperimentConfig]:
    configs, options = load_experiments(args.config)
    if getattr(args, "section", None):
        names = {c.name for c in configs}
        if args.section not in names:
            raise LtBarrierError(
                f"section {args.section!r} not found; available: "
                f"{sorted(names)}")
        configs = [c for c in configs if c.name == args.section]
    if args.seed is not None:
        from dataclasses import replace
        configs = [replace(c, seed=args.seed) for c in configs]
    return configs, options


def _emit(rows, columns, out: str | None) -> None:
    if out:
        write_csv(out, rows, columns)
        print(f"wrote {out} ({len(rows)} rows)")
        return
    print(",".join(columns))
    for row in rows:
        print(",".join("" if row.get(c) is None else
                       (repr(row[c]) if isinstance(row[c], float)
                        else str(row[c])) for c in columns))


def _validate_shifts(configs) -> None:
    for config in configs:
        qmc = any(m.startswith("QMC") for m in config.methods)
        if qmc and config.n_shifts < 2:
            raise LtBarrierError(
                f"config {config.name!r}: the standard error needs at "
                "least 2 randomization shifts (got "
                f"{config.n_shifts}); increase 'shifts'")


def cmd_price(args) -> int:
    configs, _ = _load(args)
    _validate_shifts(configs)
    rows = []
    for config in configs:
        results = run_methods(config, threads=_threads(args))
        for method, s in results.items():
            rows.append({"config": config.name, "method": method,
                         "mean": s.mean, "stderr": s.stderr,
                         "n": s.n_points, "shifts": s.n_reps,
                         "wasted_fraction": s.wasted_fraction})
    _emit(rows, SUMMARY_COLUMNS, args.out)
    return 0


def cmd_table(args) -> int:
    configs, options = _load(args)
    _validate_shifts(configs)
    baseline = args.baseline or options["baseline"]
    compare = (tuple(args.compare.split(",")) if args.compare
               else options["compare"])
    rows, _ = variance_ratio_table(configs, baseline, compare,
                                   threads=_threads(args))
    _emit(rows, TABLE_COLUMNS, args.out)
    return 0


def cmd_convergence(args) -> int:
    configs, _ = _load(args)
    rows = []
    grid = ([int(tok) for tok in args.grid.split(",")]
            if args.grid else None)
    for config in configs:
        methods = [args.method] if args.method else list(config.methods)
        for method in methods:
            result = convergence_alpha(config, method, n_grid=grid,
                                       threads=_threads(args))
            print(f"{config.name} {method}: alpha = {result.alpha:.4f} "
                  f"(intercept {result.beta:.4f})")
            for row in result.rows:
                rows.append({"config": config.name, "method": method,
                             "n": row["n"], "mean": row["mean"],
                             "sigma": row["sigma"]})
    _emit(rows, CONVERGENCE_COLUMNS, args.out)
    return 0


def cmd_selftest(args) -> int:
    from . import selftest
    return selftest.run()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltbarrier",
        description="Barrier option pricing with randomized QMC, "
                    "variance-concentrating transforms and conditional "
                    "sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="experiment file (sectioned key = value)")
            p.add_argument("--section", help="run a single section")
            p.add_argument("--seed", type=int, default=None,
                           help="override every section's seed")
        p.add_argument("--threads", type=int, default=None,
                       help="parallel replications (default "
                            "LTBARRIER_THREADS or 1)")
        p.add_argument("--out", help="write CSV here instead of stdout")

    p_price = sub.add_parser("price", help="estimate each experiment")
    common(p_price)
    p_price.set_defaults(func=cmd_price)

    p_table = sub.add_parser("table", help="variance-ratio table")
    common(p_table)
    p_table.add_argument("--baseline", help="baseline method for ratios")
    p_table.add_argument("--compare",
                         help="comma-separated comparison methods")
    p_table.set_defaults(func=cmd_table)

    p_conv = sub.add_parser("convergence",
                            help="log-sigma vs log-N regression")
    common(p_conv)
    p_conv.add_argument("--method", help="restrict to one method")
    p_conv.add_argument("--grid", help="comma-separated point budgets")
    p_conv.set_defaults(func=cmd_convergence)

    p_self = sub.add_parser("selftest", help="run the invariant suite")
    p_self.add_argument("--threads", type=int, default=None)
    p_self.add_argument("--out", help=argparse.SUPPRESS)
    p_self.set_defaults(func=cmd_selftest)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LtBarrierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
