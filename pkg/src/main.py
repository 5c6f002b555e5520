"""
Command-line front end for the LZSM simulator.

    lzsm pattern --config run.toml --workers 4
    lzsm fft --input data/outputs/lzsm_pattern.lzsm --pad 4
    lzsm arcs --shape f3
    lzsm reproduce fig4a

Artifacts go to the output directory; the run summary is printed to stdout
as JSON. Errors print one line to stderr: exit status 2 for invalid input
or solver failures, 1 for anything unexpected.
"""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from src.core.errors import LZSMError
from src.observability.logger import setup_logger
from src.pipeline.figures import get_figures, reproduce
from src.pipeline.orchestrator import PipelineOrchestrator
from src.utils.config import RunConfig, load_run_config

logger = setup_logger("main")

SUBCOMMANDS = ("floquet", "pattern", "fft", "arcs", "analytic", "decay", "overlap")
INPUT_SUBCOMMANDS = ("fft", "decay")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides [output].directory)")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("--pad", type=int, choices=(1, 2, 4), help="FFT zero-padding factor")
    common.add_argument("--sidebands", type=int, help="sideband truncation K")
    common.add_argument("--shape", help="drive preset: cos, f0, f1, f2, f3")
    common.add_argument("--coupling", help="bath coupling: x, z or mixed:<theta>")
    common.add_argument("--progress", action="store_true", help="show a progress bar for sweeps")

    parser = argparse.ArgumentParser(prog="lzsm", description="Dissipative LZSM interference simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in INPUT_SUBCOMMANDS:
            p.add_argument("--input", help="pattern grid file; runs a sweep when omitted")

    p = sub.add_parser("reproduce", parents=[common])
    p.add_argument("figure", choices=get_figures())
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Fold command-line flags into the configuration"""
    sections: Dict[str, Dict[str, Any]] = {}
    if args.out:
        sections.setdefault("output", {})["directory"] = args.out
    if args.pad:
        sections.setdefault("fft", {})["pad"] = args.pad
    if args.sidebands is not None:
        sections.setdefault("solver", {})["sidebands"] = args.sidebands
    if args.shape:
        sections["drive"] = {"preset": args.shape, "harmonics": None}
    if args.coupling:
        sections.setdefault("bath", {})["coupling"] = args.coupling
    if args.workers is not None:
        sections["workers"] = args.workers
    return cfg.with_overrides(**sections) if sections else cfg


def run(argv: Optional[List[str]] = None) -> Dict[str, Any]:
    """Parse arguments and run one subcommand; raises on failure"""
    args = build_parser().parse_args(argv)
    cfg = apply_overrides(load_run_config(args.config), args)
    logger.info("run_started", command=args.command, config=args.config)

    if args.command == "reproduce":
        return reproduce(args.figure, cfg)

    options = {}
    if args.command in INPUT_SUBCOMMANDS and args.input:
        options["input_path"] = args.input
    return PipelineOrchestrator(cfg, progress=args.progress).run(args.command, **options)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point"""
    try:
        result = run(argv)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except LZSMError as e:
        summary = getattr(e, "summary", None)
        print(f"error: {e}", file=sys.stderr)
        if summary:
            print(json.dumps({k: v for k, v in summary.items() if k != "failures"}), file=sys.stderr)
        logger.error("run_failed", error_type=type(e).__name__, error=str(e), **e.details)
        return 2
    except Exception as e:
        logger.error("run_crashed", error=str(e), exc_info=True)
        print(f"fatal: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    print(json.dumps(result, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
