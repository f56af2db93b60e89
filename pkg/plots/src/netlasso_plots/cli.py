"""netlasso-plot <kind> --in <csv...> --out <png>.

Exit codes: 0 on success, 2 on schema/config errors (message names the
offending file).
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSchemaError, PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="netlasso-plot",
        description="Render netlasso experiment CSVs as figures")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--refs", help="manifest.json with reference lines")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--title")
    parser.add_argument("--linear-y", action="store_true",
                        help="force a linear y axis")
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                    refs=args.refs, xlabel=args.xlabel, ylabel=args.ylabel,
                    logy=False if args.linear_y else None, title=args.title,
                    dpi=args.dpi)
    try:
        out = render(spec)
    except (PlotSchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
