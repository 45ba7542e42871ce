"""Command-line entry point: ``costcarbon {ingest,flatten,analyze,report}``.

Logs go to standard error; data goes to files under the output directory.
Exit codes: 0 success, 1 validation failures, 2 fatal I/O or configuration.
"""

import argparse
import logging
import sys

from . import pipeline
from .config import ConfigError, load_config

logger = logging.getLogger("costcarbon")


def build_parser():
    parser = argparse.ArgumentParser(prog="costcarbon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "parse and validate all inputs, assign tariff regions, write manifest.csv",
        "flatten": "write month-hour matrices for tariffs, AEF, MEF and DAM signals",
        "analyze": "write correlation, category, premium, regime and summary CSVs",
        "report": "concatenate the stage summaries into report.txt",
    }
    for name, text in helps.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", help="key = value configuration file")
        cmd.add_argument("--year", type=int, help="calendar year (default 2023)")
        cmd.add_argument("--jobs", type=int, help="worker processes for per-file work")
        cmd.add_argument("--out", help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(
            args.config, {"year": args.year, "jobs": args.jobs, "output_dir": args.out}
        )
    except (ConfigError, OSError) as exc:
        logger.error("configuration: %s", exc)
        return pipeline.EXIT_FATAL

    try:
        if args.command == "ingest":
            failures = pipeline.ingest(config)
        elif args.command == "flatten":
            failures = pipeline.flatten(config)
        elif args.command == "analyze":
            print(pipeline.analyze(config), end="")
            failures = 0
        else:
            print(pipeline.report(config), end="")
            failures = 0
    except (pipeline.StageError, OSError) as exc:
        logger.error("%s: %s", args.command, exc)
        return pipeline.EXIT_FATAL
    if failures:
        logger.error("%s: %d failure(s)", args.command, failures)
        return pipeline.EXIT_VALIDATION
    return pipeline.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
