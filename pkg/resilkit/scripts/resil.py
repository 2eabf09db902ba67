# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""The ``resilkit`` command.

Each experiment kind has a subcommand that runs one scenario file of that
kind; ``run`` reads the kind from the file.  ``validate`` checks files
without running them, ``schema`` prints the defaults table and
``examples`` lists or copies the bundled scenario files.

Exit codes: 0 on success, 1 for an invalid scenario, 2 for any other
toolkit or I/O error.

"""

import os
import sys
import json
import shutil
import logging
from argparse import ArgumentParser, ArgumentTypeError

import resilkit
from ..core.errors import ResilError, ValidationError
from ..core.scenario import KINDS, schema
from ..experiments import load_scenario, run_experiment
from ..report import FORMATS, emit_report
from ..vis import plot_report

logger = logging.getLogger(__name__)

#: Output directory used when neither --out nor the scenario sets one.
DEFAULT_OUTDIR = "resilkit_out"

EXAMPLES_DIR = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "data", "examples")


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip() != ""]
    for f in fmts:
        if f not in FORMATS:
            raise ArgumentTypeError("unknown format {!r}".format(f))
    return fmts


def _add_run_options(p):
    p.add_argument("scenario", help="Scenario file (json, yaml or toml, "
                   "optionally gzipped).")
    p.add_argument("--seed", type=int, default=None,
                   help="Master seed, overrides the one in the file.")
    p.add_argument("--out", default=None,
                   help="Output directory.  Defaults to output.dir of the "
                   "scenario, then $RESILKIT_OUTDIR, then {}.".format(
                       DEFAULT_OUTDIR))
    p.add_argument("--format", type=_formats, default=None,
                   help="Comma separated output formats (json,csv).")
    p.add_argument("--plots", action="store_true", default=False,
                   help="Also write PDF plots.")


def get_parser():
    parser = ArgumentParser(
        prog="resilkit",
        description="Run cyber-resilience experiments described by "
        "scenario files.")
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="Pass multiple times to increase.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for kind in KINDS:
        p = sub.add_parser(kind, help="Run a {} experiment.".format(kind))
        _add_run_options(p)
    p = sub.add_parser("run", help="Run a scenario of any kind.")
    _add_run_options(p)
    p = sub.add_parser("validate",
                       help="Check scenario files without running them.")
    p.add_argument("scenario", nargs="+", help="Scenario files.")
    p = sub.add_parser("schema", help="Print the scenario defaults table.")
    p.add_argument("--kind", choices=KINDS, default=None,
                   help="Only this experiment kind.")
    p = sub.add_parser("examples", help="List or copy the bundled "
                       "example scenarios.")
    p.add_argument("--copy", metavar="DIR", default=None,
                   help="Copy the examples into this directory.")
    return parser


def _outdir(args, cfg):
    if args.out is not None:
        return args.out
    out = cfg.get("output") or dict()
    if out.get("dir") is not None:
        return out["dir"]
    return os.environ.get("RESILKIT_OUTDIR", DEFAULT_OUTDIR)


def run(args):
    cfg = load_scenario(args.scenario, seed=args.seed)
    if args.command != "run" and cfg.kind != args.command:
        raise ValidationError(["kind: file describes a {} experiment, not "
                               "{}".format(cfg.kind, args.command)],
                              path=args.scenario)
    report = run_experiment(cfg)
    out = cfg.get("output") or dict()
    formats = args.format
    if formats is None:
        formats = out.get("formats") or list(FORMATS)
    if args.plots or out.get("plots", False):
        plot_report(report)
    paths = emit_report(report, _outdir(args, cfg), formats=formats)
    for p in paths:
        print(p)
    return 0


def validate(args):
    status = 0
    for path in args.scenario:
        try:
            cfg = load_scenario(path)
        except ValidationError as e:
            print(str(e), file=sys.stderr)
            status = 1
            continue
        print("{}: valid {} scenario".format(path, cfg.kind))
    return status


def print_schema(args):
    table = schema()
    if args.kind is not None:
        table = {args.kind: table[args.kind]}
    print(json.dumps(table, indent=2))
    return 0


def examples(args):
    files = sorted(f for f in os.listdir(EXAMPLES_DIR)
                   if f.endswith(".json"))
    if args.copy is None:
        for f in files:
            print(os.path.join(EXAMPLES_DIR, f))
        return 0
    os.makedirs(args.copy, exist_ok=True)
    for f in files:
        dest = os.path.join(args.copy, f)
        shutil.copyfile(os.path.join(EXAMPLES_DIR, f), dest)
        print(dest)
    return 0


def main(args=None):
    if args is None:
        args = sys.argv[1:]
    parser = get_parser()
    args = parser.parse_args(args)

    resilkit.logger.setLevel('WARNING')
    if args.verbose >= 1:
        resilkit.logger.setLevel('INFO')
    if args.verbose >= 2:
        resilkit.logger.setLevel('DEBUG')

    commands = dict(validate=validate, schema=print_schema,
                    examples=examples)
    func = commands.get(args.command, run)
    try:
        return func(args)
    except ValidationError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (ResilError, OSError) as e:
        print("resilkit {}: {}".format(args.command, e), file=sys.stderr)
        if e.__cause__ is not None:
            logger.debug("caused by {!r}".format(e.__cause__))
        return 2


if __name__ == "__main__":
    sys.exit(main())
