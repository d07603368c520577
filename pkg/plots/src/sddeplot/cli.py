"""Command line front end: one figure per invocation.

``--orders`` selects the order-versus-correlation figure, ``--errors``
the log-log error diagnostic; ``--out`` names the image file.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .figures import FigureSpec, SchemaError, plot_loglog_errors, plot_order_vs_rho


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sddeplot",
        description="Render convergence-study figures from CSV results")
    parser.add_argument("--orders", help="orders.csv from a sweep or "
                        "convergence run; draws order against correlation")
    parser.add_argument("--errors", help="errors.csv from a sweep or "
                        "convergence run; draws the log-log error diagnostic")
    parser.add_argument("--out", required=True,
                        help="output image path (.svg recommended)")
    parser.add_argument("--scheme", help="plot only this scheme")
    parser.add_argument("--title", default="", help="figure title")
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if bool(args.orders) == bool(args.errors):
        parser.error("exactly one of --orders or --errors is required")
    spec = FigureSpec(out_path=args.out, title=args.title, scheme=args.scheme)
    try:
        if args.orders:
            plot_order_vs_rho(args.orders, spec)
        else:
            plot_loglog_errors(args.errors, spec)
    except SchemaError as exc:
        print(f"error: schema: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
