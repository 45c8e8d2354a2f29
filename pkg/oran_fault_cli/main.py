#!/bin/env python3
import logging
import sys
from typing import Optional, Sequence

from art import text2art
from prompt_toolkit import HTML, print_formatted_text

from oran_fault_cli.command_parser import build_command_parser

from .version import version

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )


def print_startup_info():
    print_formatted_text(text2art("O-RAN Faults"))  # Print fancy text
    print_formatted_text(HTML(f"<b><ansigreen>Version {version}</ansigreen></b>"))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_command_parser().parse_args(argv)
    setup_logging(args.verbose)
    print_startup_info()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
