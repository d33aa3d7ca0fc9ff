"""
Command line front end.

    quadcert <command> --config run.json [--seed N] [--workers N] [--profile NAME] [--audit]

Exit status: 0 ok, 2 verification failures, 3 solver errors, 4 config errors.
"""

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from quadcert.config import COMMANDS, RunConfig
from quadcert.exceptions import ConfigError, ParseError
from quadcert.workflows import WORKFLOWS
from quadcert.workflows.base import ExitCode, Workflow

CONFIG_ERROR = 4
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadcert",
        description="Verified quadratic constraints and QC-based network analysis",
    )
    parser.add_argument("command", choices=COMMANDS, help="pipeline step to run")
    parser.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--workers", type=int, default=None, help="concurrent solves")
    parser.add_argument("--profile", type=str, default=None, help="candidate profile name")
    parser.add_argument("--audit", action="store_true", default=False,
                        help="audit the verified family (verify, report)")
    parser.add_argument("--verbose", action="store_true", default=False, help="log debug lines to stderr")
    return parser


def _attach_log(config: RunConfig, verbose: bool) -> logging.Handler:
    """Sidecar log next to the artifacts; timestamps live only here."""
    output = Path(config.output)
    output.mkdir(parents=True, exist_ok=True)
    stem = config.options.get("name", config.command)
    handler = logging.FileHandler(output / f"{stem}.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger = logging.getLogger("quadcert")
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.addHandler(handler)
    logging.captureWarnings(True)
    logging.getLogger("py.warnings").addHandler(handler)
    return handler


def run(config: RunConfig, verbose: bool = False) -> ExitCode:
    """Validate ``config`` and run its workflow; the sidecar log is closed afterwards."""
    config.validate()
    handler = _attach_log(config, verbose)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            workflow: Workflow = WORKFLOWS[config.command](config)
            return workflow.run()
    finally:
        logging.getLogger("quadcert").removeHandler(handler)
        logging.getLogger("py.warnings").removeHandler(handler)
        handler.close()
        logging.captureWarnings(False)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = RunConfig.from_file(args.config)
        if config.command != args.command:
            raise ConfigError(f"Config is for '{config.command}', command line asks for '{args.command}'")
        config.apply_overrides(seed=args.seed, workers=args.workers, profile=args.profile, audit=args.audit)
        code = run(config, verbose=args.verbose)
    except (ConfigError, ParseError) as exc:
        print(f"quadcert: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    return code.status


if __name__ == "__main__":
    sys.exit(main())
