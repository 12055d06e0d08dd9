"""
Main entry point for the unbiased particle MCMC command-line tool.
"""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from .config import config_manager
from .models.error_handling import (
    BUDGET_PARTIAL_EXIT_CODE,
    ErrorCategory,
    ExitCodeMapping,
    SamplerError,
)
from .tools import (
    cmd_adapt,
    cmd_diagnose,
    cmd_estimate,
    cmd_ggm_chain,
    cmd_run,
    cmd_smc,
    cmd_synth_ggm,
)

logger = logging.getLogger(__name__)


def _dispatch(args: argparse.Namespace) -> Dict[str, Any]:
    commands: Dict[str, Callable[..., Dict[str, Any]]] = {
        "adapt": lambda config: cmd_adapt(config),
        "run": lambda config: cmd_run(config, args.schedule),
        "estimate": lambda config: cmd_estimate(config, args.runs),
        "diagnose": lambda config: cmd_diagnose(config, args.runs),
        "synth-ggm": lambda config: cmd_synth_ggm(config),
        "smc": lambda config: cmd_smc(config, args.schedule),
        "ggm-chain": lambda config: cmd_ggm_chain(config),
    }
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "log_level": args.log_level,
        "outputs": {"out_dir": args.out} if args.out else None,
    }
    config = config_manager.load_config(args.config, overrides)
    config_manager.setup_logging()
    if not config_manager.validate_config():
        raise ValueError("Invalid configuration")
    logger.info(f"Running '{args.command}' for model '{config.model.name}'")
    return commands[args.command](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unbiased-pmcmc",
        description="Unbiased estimation with coupled particle MCMC",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Typical workflow:
  unbiased-pmcmc adapt    --config exp.json
  unbiased-pmcmc run      --config exp.json --workers 8
  unbiased-pmcmc estimate --config exp.json
  unbiased-pmcmc diagnose --config exp.json

Configuration priority (highest to lowest):
1. Command line arguments
2. Environment variables (a .env file is read if present)
3. Configuration file

Environment variables:
  UPMC_SEED          Root random seed
  UPMC_WORKERS       Number of replicate workers
  UPMC_LOG_LEVEL     Log level (DEBUG, INFO, WARNING, ERROR)
  UPMC_REPLICATES    Number of coupled replicates R
  UPMC_TIME_BUDGET   Per-replicate time budget in seconds
  UPMC_OUT_DIR       Output directory

Configuration file locations (searched in order):
  - ./upmc_config.json
  - ~/.upmc_config.json

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 partial results (time budget exhausted), 1 other failure.
        """,
    )
    parser.add_argument(
        "--create-config",
        metavar="FILE",
        help="Create a sample configuration file and exit",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Configuration file path (JSON format)")
    common.add_argument("--seed", type=int, help="Root random seed")
    common.add_argument("--workers", type=int, help="Number of replicate workers")
    common.add_argument("--out", help="Output directory (overrides config file)")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Set log level (overrides config file)",
    )

    sub = parser.add_subparsers(dest="command")
    sub.add_parser("adapt", parents=[common], help="Build the tempering schedule")
    for name, text in (
        ("run", "Run coupled particle MCMC replicates"),
        ("smc", "Estimate with a single large SMC run"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--schedule", help="Schedule JSON (default: outputs.schedule)")
    for name, text in (
        ("estimate", "Unbiased estimates with confidence intervals"),
        ("diagnose", "Meeting times, IACT and variance x time"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--runs", help="Run store JSONL (default: outputs.runs)")
    sub.add_parser("synth-ggm", parents=[common], help="Write synthetic GGM data")
    sub.add_parser(
        "ggm-chain", parents=[common], help="Run the plain GGM chain for reference"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for command line."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Handle create-config command
    if args.create_config:
        try:
            config_manager.create_sample_config(args.create_config)
            print(f"Sample configuration file created: {args.create_config}")
            print("Please edit the file to describe your model and run settings.")
            sys.exit(0)
        except Exception as e:
            print(f"Failed to create config file: {e}", file=sys.stderr)
            sys.exit(1)

    if not args.command:
        parser.print_help()
        sys.exit(2)

    try:
        summary = _dispatch(args)
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
        if summary.get("partial"):
            print("Some replicates did not finish within the budget.", file=sys.stderr)
            sys.exit(BUDGET_PARTIAL_EXIT_CODE)
        sys.exit(ExitCodeMapping.SUCCESS)

    except SamplerError as e:
        print(ExitCodeMapping.get_user_friendly_message(e), file=sys.stderr)
        sys.exit(ExitCodeMapping.for_exception(e))
    except ValueError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        print("\nRun with --help for configuration options.", file=sys.stderr)
        sys.exit(ExitCodeMapping.get_exit_code(ErrorCategory.CONFIGURATION))
    except KeyboardInterrupt:
        print("\nInterrupted.")
        sys.exit(ExitCodeMapping.FAILURE)
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(ExitCodeMapping.for_exception(e))


if __name__ == "__main__":
    main()
