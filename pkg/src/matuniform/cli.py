"""Command line front end.

Exit codes: 0 the run completed (verdicts may be negative), 2 the input was
rejected, 3 a stage failed.
"""
import argparse
import logging
import sys
from dataclasses import replace

from . import __version__
from .body import ingest
from .errors import ParseError, SchemaError, StageError, TableShapeError
from .pipeline import run_pipeline
from .report import emit, report_text

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3
DEFAULT_OUT = "matuniform-out"

VERB_STAGES = {
    "classify": ("classify",),
    "uniformity": ("uniformity",),
    "unisymmetry": ("classify", "unisymmetry"),
    "geometry": ("classify", "uniformity", "unisymmetry", "geometry"),
    "report": None,  # the description's stages, all by default
}

log = logging.getLogger("matuniform")


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matuniform",
        description="Material symmetry, uniformity and homogeneity analysis of gridded elastic bodies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="body description (UTF-8 JSON)")
    common.add_argument("--seed", type=_u64, help="override the analysis seed")
    common.add_argument("--tol-sym", type=_positive, help="symmetry acceptance tolerance")
    common.add_argument("--tol-iso", type=_positive, help="isomorphism acceptance tolerance")
    common.add_argument("--tol-curv", type=_positive, help="curvature tolerance (default max(1e-10, 10 h^2))")
    common.add_argument("--out", help=f"output directory (default: description's output.dir or {DEFAULT_OUT})")
    common.add_argument("--format", action="append", choices=("json", "txt", "csv"), dest="formats",
                        help="output format; repeat for several")
    common.add_argument("--quiet", action="store_true", help="do not print the text report")
    sub = parser.add_subparsers(dest="verb", required=True)
    helps = {
        "classify": "classify every grid point by its symmetry group",
        "uniformity": "search material isomorphisms from the archetype point",
        "unisymmetry": "classify and test conjugacy of the symmetry groups",
        "geometry": "build the intrinsic metric or volume form and its curvature",
        "report": "run the full pipeline",
    }
    for verb, text in helps.items():
        sub.add_parser(verb, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        desc = ingest(args.input)
    except (ParseError, SchemaError, TableShapeError) as exc:
        log.error("input rejected: %s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_INPUT

    tols = dict(desc.tolerances)
    for key, val in (("sym", args.tol_sym), ("iso", args.tol_iso), ("curv", args.tol_curv)):
        if val is not None:
            tols[key] = val
    desc = replace(desc, tolerances=tols, seed=desc.seed if args.seed is None else args.seed)
    formats = args.formats if args.formats is not None else list(desc.formats)
    out_dir = args.out or desc.out_dir or DEFAULT_OUT

    try:
        report = run_pipeline(desc, VERB_STAGES[args.verb])
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_STAGE
    if not args.quiet:
        sys.stdout.write(report_text(report))
    try:
        paths = emit(report, out_dir, formats)
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return EXIT_STAGE
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
