"""Command-line front end.

Exit codes:
    0  success
    1  unexpected failure
    2  config, validation or parameter error
    3  numeric failure (NaN/Inf during crafting, training or evaluation)
    4  I/O error (missing input or weights file, unreadable WAV, unwritable output)
"""
import argparse
import logging
import sys
from typing import List, Optional

from cli.commands import COMMANDS
from cli.config_loader import load_config
from errors import (
    ArtifactIOError,
    ConfigError,
    FormatError,
    NumericError,
    ParameterError,
    PlanValidationError,
    UndefinedMetricError,
)
from logging_config import configure_logging
from settings import SECTION, get_config, log_level

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

DESCRIPTIONS = {
    "craft": "Craft an adversarial perturbation against one model",
    "evaluate": "Frame-wise metrics with per-track and global medians",
    "transfer": "Run an experiment plan (whitebox, transfer, untargeted, regularizers)",
    "train-toy": "Train a toy separator on synthetic clips and save its weights",
    "synth": "Write deterministic synthetic stems and mixtures",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file for the subcommand")
    common.add_argument("--output-dir", help="Directory for every artifact of the run")
    common.add_argument("--jobs", type=int, help="Parallel jobs for experiment plans")
    common.add_argument("--seed", type=int, help="Top-level seed all randomness derives from")
    common.add_argument("--overrides", nargs="*", default=[], metavar="KEY=VALUE",
                        help="Dotted-path config overrides, values parsed as JSON when possible")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")

    parser = argparse.ArgumentParser(prog="sepadv", description="Adversarial attacks on audio source separation")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, description in DESCRIPTIONS.items():
        subparsers.add_parser(name, parents=[common], help=description, description=description)
    return parser


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NumericError):
        return EXIT_NUMERIC
    if isinstance(error, UndefinedMetricError):
        return EXIT_NUMERIC
    if isinstance(error, (ArtifactIOError, FormatError)):
        return EXIT_IO
    if isinstance(error, (ConfigError, PlanValidationError, ParameterError)):
        return EXIT_CONFIG
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_UNEXPECTED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_config()[SECTION]
    configure_logging(
        log_file=settings.get("log_file") or None,
        log_level=logging.DEBUG if args.verbose else log_level(),
    )
    try:
        fallbacks = {"output_dir": settings.get("output_dir"), "jobs": settings.getint("jobs")}
        config = load_config(
            args.subcommand, args.config, args.overrides, args.output_dir, args.jobs, args.seed, fallbacks
        )
        logger.info(f"Running {args.subcommand} with config {args.config or '(defaults)'}")
        summary = COMMANDS[args.subcommand](config)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_UNEXPECTED:
            logger.error(f"{args.subcommand} failed unexpectedly: {e}", exc_info=True)
        else:
            logger.error(f"{args.subcommand} failed: {e}")
        return code

    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
