"""Command line: ``plots render --spec figure.json``.

Exit codes: 0 success, 2 schema/validation error (message names the
offending column or key), 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import sys

from .formats import SchemaError
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description="Render cluster-gas figures")
    sub = parser.add_subparsers(dest="command")
    render_parser = sub.add_parser("render", help="render a figure from a spec JSON")
    render_parser.add_argument("--spec", required=True, help="figure spec JSON path")
    args = parser.parse_args(argv)

    if args.command != "render":
        parser.print_usage(sys.stderr)
        sys.stderr.write("expected the 'render' subcommand\n")
        return 64
    try:
        out = render(args.spec)
    except SchemaError as err:
        sys.stderr.write(f"schema error: {err}\n")
        return 2
    except OSError as err:
        sys.stderr.write(f"i/o error: {err}\n")
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
