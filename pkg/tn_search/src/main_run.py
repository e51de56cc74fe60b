"""
tn_search command line.

  run           --config <file> [--key value ...]   search a structure, write run artifacts
  report        <run dir> [--json]                  summarize a finished run
  gen-synthetic --shape 6,6,6 --ranks 3,2,1 ...      write a planted-structure bundle
  split         <bundle> --frac 0.8                 write train/test bundles
  embed         <bundle> --axis -1 --window 5 ...   delay-embed a time series into windows
"""
import argparse
import logging
import sys

from config import RunConfig
from errors import ConfigError, ReportError
from orchestration.experiment_runner import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    cmd_embed,
    cmd_gen_synthetic,
    cmd_run,
    cmd_split,
)
from utils.report import cmd_report

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(levelname)s: %(message)s',
        force=True
    )
    # Suppress verbose HTTP request logs from the chat clients
    logging.getLogger('httpx').setLevel(logging.WARNING)
    logging.getLogger('openai').setLevel(logging.WARNING)
    logging.getLogger('urllib3').setLevel(logging.WARNING)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tn_search", description="Tensor network structure search",
                                     allow_abbrev=False)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a structure search", allow_abbrev=False)
    run.add_argument("--config", help="RunConfig JSON file; any field can be overridden with --key value")

    report = sub.add_parser("report", help="summarize a run directory")
    report.add_argument("run_dir")
    report.add_argument("--json", action="store_true", help="emit the report as JSON")

    gen = sub.add_parser("gen-synthetic", help="generate a planted-structure dataset")
    gen.add_argument("--shape", type=_int_list, required=True)
    gen.add_argument("--ranks", type=_int_list, required=True)
    gen.add_argument("--samples", type=int, default=8)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.add_argument("--out", required=True)

    split = sub.add_parser("split", help="temporal train/test split of a bundle")
    split.add_argument("bundle")
    split.add_argument("--frac", type=float, default=0.8)
    split.add_argument("--out")

    embed = sub.add_parser("embed", help="delay-embed a single-series bundle into windowed samples")
    embed.add_argument("bundle")
    embed.add_argument("--axis", type=int, default=-1)
    embed.add_argument("--window", type=int, required=True)
    embed.add_argument("--stride", type=int, default=1)
    embed.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    setup_logging(args.verbose)

    if args.command != "run" and extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")

    if args.command == "run":
        try:
            config = RunConfig.load(args.config) if args.config else RunConfig()
            config = config.with_overrides(extra)
        except ConfigError as e:
            logger.error(f"✗ Configuration error: {e}")
            return EXIT_CONFIG
        return cmd_run(config)

    if args.command == "report":
        try:
            print(cmd_report(args.run_dir, as_json=args.json))
        except ReportError as e:
            logger.error(f"✗ {e}")
            return EXIT_IO
        return EXIT_OK

    if args.command == "gen-synthetic":
        return cmd_gen_synthetic(args.shape, args.ranks, args.samples, args.seed, args.out, args.noise)

    if args.command == "embed":
        return cmd_embed(args.bundle, args.axis, args.window, args.out, args.stride)

    return cmd_split(args.bundle, args.frac, args.out)


if __name__ == "__main__":
    sys.exit(main())
