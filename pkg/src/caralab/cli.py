"""Command line entry point: ``caralab run | check | zoo``."""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from . import __version__
from .domains import DomainError
from .harness import ReportError, check_report, emit, load_report, run_suite


def zoo_text() -> str:
    return resources.files("caralab").joinpath("data/zoo.json").read_text(encoding="utf-8")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    ap = _Parser(prog="caralab", description="Numerical checks of invariant-metric volume inequalities.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the verification suite")
    run.add_argument("--config", help="zoo config JSON (default: built-in zoo)")
    run.add_argument("--seed", type=_u64, default=0)
    run.add_argument("--samples", type=_positive, default=10**6, help="Monte Carlo samples per volume")
    run.add_argument("--budget", type=_positive, default=20_000, help="evaluations per optimization stage")
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--no-timing", action="store_true", help="omit wall time for byte-stable JSON")

    chk = sub.add_parser("check", help="summarize a JSON report; exit 1 on any failed check")
    chk.add_argument("report")

    sub.add_parser("zoo", help="print the built-in config")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "zoo":
        sys.stdout.write(zoo_text())
        return 0
    if args.cmd == "check":
        try:
            code, summary = check_report(load_report(args.report))
        except (OSError, ReportError) as exc:
            print(f"caralab: {exc}", file=sys.stderr)
            return 2
        print(summary)
        return code
    try:
        text = zoo_text() if args.config is None else open(args.config, encoding="utf-8").read()
        report = run_suite(text, args.seed, args.samples, args.budget)
    except (OSError, ValueError, DomainError) as exc:
        print(f"caralab: {exc}", file=sys.stderr)
        return 2
    out = emit(report, args.format, timing=not args.no_timing)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(out)
        except OSError as exc:
            print(f"caralab: cannot write {args.out}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(out)
    code, summary = check_report(report)
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
