"""Command-line entry point: ``ramanpairs {scan,figure,verify,report}``.

Exit codes are 0 on success, 1 on usage errors, 2 on domain errors and 3
when an oracle verification fails or is incomplete.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import DomainError, RamanError
from .measures import asymptotic_report, balanced_point_report, measure_report
from .model import moments_asymptotic
from .scan import FIGURES, ScanResult, apply_overrides, load_recipe, run_recipe, write_results, _jsonable
from .verify import SUBSETS, run_verify

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("ramanpairs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a recipe value; repeatable (e.g. n_v=0.5, options.zfrac=0.5)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for grid scans")
    p.add_argument("--tolerance", type=float, default=None, help="verification tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ramanpairs", description="Stokes/anti-Stokes correlation sweeps and checks")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scan", help="run a sweep from a YAML recipe")
    p.add_argument("--config", required=True, help="recipe path")
    _common(p)

    p = sub.add_parser("figure", help="regenerate data for one figure")
    p.add_argument("name", help="one of " + ", ".join(FIGURES))
    p.add_argument("--config", default=None, help="use this recipe instead of the bundled one")
    _common(p)

    p = sub.add_parser("verify", help="compare analytic moments with the Fock oracle")
    p.add_argument("subset", help="one of " + ", ".join(SUBSETS))
    p.add_argument("--budget", type=int, default=400, help="maximum Fock dimension per mode")
    _common(p)

    p = sub.add_parser("report", help="closed-form tables at the balanced point and asymptotically")
    p.add_argument("--epsilon", type=float, default=4.0)
    p.add_argument("--n-t", type=float, default=0.0)
    p.add_argument("--no-bell", action="store_true", help="skip the Bell optimization")
    _common(p)
    return parser


def _run_recipe(name: str, recipe: dict, args) -> int:
    recipe = apply_overrides(recipe, args.overrides)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = run_recipe(recipe, jobs=args.jobs)
    paths = write_results(name, results, args.out, extra={"overrides": sorted(args.overrides)})
    for res in results:
        failed = sum(1 for row in res.rows if row and isinstance(row[-1], str) and row[-1])
        log.info("%s: %d rows, %d with error tags", res.panel, len(res.rows), failed)
        for w in res.warnings[:5]:
            log.warning("%s: %s", res.panel, w)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_scan(args) -> int:
    recipe = load_recipe(args.config)
    return _run_recipe(recipe.get("name", Path(args.config).stem), recipe, args)


def cmd_figure(args) -> int:
    if args.name not in FIGURES:
        raise UsageError(f"unknown figure {args.name!r}; choose from {', '.join(FIGURES)}")
    recipe = load_recipe(args.config or args.name)
    return _run_recipe(args.name, recipe, args)


def cmd_verify(args) -> int:
    if args.subset not in SUBSETS:
        raise UsageError(f"unknown subset {args.subset!r}; choose from {', '.join(SUBSETS)}")
    report = run_verify(args.subset, budget=args.budget, tolerance=args.tolerance)
    for check in report.checks:
        print(check.line())
    for note in report.notes:
        print(f"note: {note}")
    if not report.complete:
        print("INCOMPLETE: verification did not finish within the budget")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"verify_{args.subset}.json"
    path.write_text(json.dumps(_jsonable(report.as_dict()), indent=2, sort_keys=True) + "\n")
    print(path)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_report(args) -> int:
    eps, n_t = args.epsilon, args.n_t
    bell = not args.no_bell
    tables = {}
    if eps > 1:
        tables["balanced"] = balanced_point_report(eps, bell=bell).as_dict()
        tables["asymptotic"] = asymptotic_report(eps, n_t, bell=bell).as_dict()
        tables["asymptotic_generic"] = measure_report(moments_asymptotic(eps, n_t), bell=bell).as_dict()
    else:
        raise DomainError("closed-form tables need epsilon > 1")
    keys = sorted(next(iter(tables.values())))
    lines = ["quantity," + ",".join(tables)]
    for k in keys:
        lines.append(k + "," + ",".join(_cell(t[k]) for t in tables.values()))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    args.out.mkdir(parents=True, exist_ok=True)
    stem = f"report_eps{eps:g}_nt{n_t:g}"
    (args.out / f"{stem}.csv").write_text(text)
    meta = {"epsilon": eps, "n_t": n_t, "version": __version__, "tables": tables}
    (args.out / f"{stem}.json").write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return "%.12g" % value


COMMANDS = {"scan": cmd_scan, "figure": cmd_figure, "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, RamanError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
