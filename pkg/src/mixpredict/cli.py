"""Command-line entry point: ``mixpredict <command> [options]``.

Exit codes: 0 success, 2 schema/parse error, 3 numerical failure,
4 infeasible request, 1 anything else.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys

from . import fixtures, market, mixmodel, report, simulate, validation
from .errors import InfeasibleError, InputError, NumericalError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

log = logging.getLogger("mixpredict")


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r}, expected YYYY-MM-DD") from None


def _load(args) -> list:
    records = market.ingest(args.data)
    records = market.select_phase(records, args.phase)
    if args.start or args.end:
        records = market.select_dates(records, args.start, args.end)
    if not records:
        raise InputError("no records in the selected date range")
    return records


def cmd_simulate(args) -> int:
    configs = [
        simulate.SimConfig(
            n=n, sigma=s, replicates=args.replicates, T=args.T, J=args.J, a=args.a,
            lam=args.lam, seed=args.seed, n_components=args.n_components,
        )
        for s in args.sigma
        for n in args.n
    ]
    reports = simulate.run_study(configs, jobs=args.jobs, max_failure_rate=args.max_failure_rate)
    _emit(simulate.reports_to_csv(reports), args.out)
    if args.tables:
        _emit(simulate.reports_to_tables(reports), args.tables)
    elif args.out not in (None, "-"):
        sys.stdout.write(simulate.reports_to_tables(reports))
    return EXIT_OK


def cmd_fit(args) -> int:
    data = market.to_dataset(_load(args))
    fit = mixmodel.fit(data, args.lam, include_intercept=args.intercept, ridge=args.ridge)
    _emit(mixmodel.to_json(fit), args.out)
    if args.out not in (None, "-"):
        sys.stdout.write(report.coefficient_table(fit))
    return EXIT_OK


def cmd_cv(args) -> int:
    records = _load(args)
    if args.tau:
        records = market.threshold_subsample(records, args.tau)
    rep = validation.cross_validate(
        records, args.k, args.lam, args.seed, include_intercept=args.intercept, tau=args.tau
    )
    _emit(validation.cv_to_csv(rep), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    records = _load(args)
    taus = validation.tau_grid(args.tau_max, args.tau_step)
    rows = validation.tau_sweep(
        records, taus, args.k, args.seed, args.lam, include_intercept=args.intercept
    )
    _emit(validation.sweep_to_csv(rows), args.out)
    best = validation.sweep_argmax(rows)
    if best is not None:
        print(
            f"max accuracy {best.mean_accuracy:.4f} at tau={best.tau:g} (n={best.n_kept})",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_report(args) -> int:
    fit = mixmodel.load(args.model)
    files = report.report_fit(fit, args.out_dir)
    sys.stdout.write(files["coefficients.txt"])
    return EXIT_OK


def cmd_fixtures(args) -> int:
    for path in fixtures.write_all(args.out_dir, seed=args.seed):
        print(path)
    return EXIT_OK


def _data_options(p) -> None:
    p.add_argument("--data", required=True, help="market CSV file")
    p.add_argument("--phase", default="all", choices=["all", *market.PHASES],
                   help="preset date range (default: all)")
    p.add_argument("--start", type=_date, help="first date to keep (YYYY-MM-DD)")
    p.add_argument("--end", type=_date, help="last date to keep (YYYY-MM-DD)")
    p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixpredict", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo study of the estimator")
    p.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    p.add_argument("--sigma", type=float, nargs="+", default=[0.2, 0.4, 0.6])
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.85)
    p.add_argument("--n-components", type=int, default=None,
                   help="fixed number of functional components (overrides --lambda)")
    p.add_argument("--T", type=int, default=100, help="grid size")
    p.add_argument("--J", type=int, default=50, help="generator series length")
    p.add_argument("--a", type=float, default=1.1, help="score decay exponent")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-failure-rate", type=float, default=0.05)
    p.add_argument("--out", help="CSV report path (default: stdout)")
    p.add_argument("--tables", help="also write aligned text tables to this path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the mixed model on a market CSV")
    _data_options(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.99)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--out", help="model file (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="k-fold cross-validated accuracy")
    _data_options(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.99)
    p.add_argument("--tau", type=float, default=0.0, help="drop days with |open return| <= tau")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sweep", help="accuracy against the open-return threshold tau")
    _data_options(p)
    p.add_argument("--tau-max", type=float, default=0.01)
    p.add_argument("--tau-step", type=float, default=0.0005)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.99)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="coefficient table and curve CSV from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", help="write coefficients.txt, coefficients.csv, beta_curve.csv here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("fixtures", help="write the synthetic market fixtures")
    p.add_argument("--out-dir", default="fixtures")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
