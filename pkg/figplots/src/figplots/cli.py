"""Command-line entry point: render figures from plot specs."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import SpecError, load_spec

EXIT_OK = 0
EXIT_SPEC = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figplots",
        description="Render static figures from simulator CSV output.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    plot = subparsers.add_parser("plot", help="render one figure from a plot spec")
    plot.add_argument("--spec", required=True, help="path to a plot spec JSON file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        plot_spec = load_spec(args.spec)
        output = render(plot_spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    print(f"wrote {output}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
