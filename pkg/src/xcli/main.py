"""
Command-line entry point: python -m src.xcli.main <subcommand> [flags]
"""
import argparse
import logging
import sys
import time
from typing import List, Optional

from src.utils.config import get_settings
from src.utils.exceptions import FedSplitError
from src.xcli.checks import SUITES
from src.xcli.commands import cmd_check, cmd_compare, cmd_interp, cmd_run, cmd_stats, elapsed_note, prepare

logger = logging.getLogger(__name__)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 63:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**63), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsplit", description="Private-shared federated learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, help="Output directory (overrides config and FEDSPLIT_OUTPUT_DIR)")
    common.add_argument("--seed", type=_seed, help="Root seed (overrides config)")

    experiment = argparse.ArgumentParser(add_help=False, parents=[common])
    experiment.add_argument("--config", type=str, required=True, help="Experiment TOML file")
    experiment.add_argument("--threads", type=int, help="Client worker threads (falls back to FEDSPLIT_THREADS)")

    sub.add_parser("run", parents=[experiment], help="Train one way over the learning-rate grid")
    compare = sub.add_parser("compare", parents=[experiment], help="Train and summarize several ways")
    compare.add_argument("--ways", nargs="+", help="Way names; defaults to [compare] ways or every way for L")
    sub.add_parser("interp", parents=[experiment], help="Train AaBb, sweep alpha/beta, recommend a way")
    sub.add_parser("stats", parents=[experiment], help="Write partition statistics without training")

    check = sub.add_parser("check", parents=[common], help="Run an oracle suite")
    check.add_argument("suite", choices=SUITES)
    check.add_argument("--trials", type=int, default=100, help="Random trials per case")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    settings = get_settings()
    if args.command == "check":
        return cmd_check(args.suite, args.out, args.seed or 0, args.trials, settings)

    ctx = prepare(args.config, args.out, args.seed, args.threads, settings)
    logger.info(f"🚀 {args.command}: way {ctx.config.way}, seed {ctx.config.seed}, "
                f"{ctx.threads} thread(s), output {ctx.storage.out_dir}")
    if args.command == "run":
        return cmd_run(ctx)
    if args.command == "compare":
        return cmd_compare(ctx, args.ways)
    if args.command == "interp":
        return cmd_interp(ctx)
    return cmd_stats(ctx)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(level=settings.log_level)
    logger.info(f"🚀 {settings.app_name} [{settings.environment}] {args.command}")

    started = time.perf_counter()
    try:
        code = dispatch(args)
    except FedSplitError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    logger.info(f"✅ {args.command} {elapsed_note(time.perf_counter() - started)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
