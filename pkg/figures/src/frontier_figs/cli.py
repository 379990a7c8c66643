"""Command line: frontier-figs render --kind tail --in tail.csv --out tail.svg"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontier-figs",
        description="Render frontier-lab experiment CSVs into figures",
    )
    sub = parser.add_subparsers(dest="command")
    p = sub.add_parser("render", help="render one CSV into one figure")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="input_csv", required=True)
    p.add_argument("--out", dest="output", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "render":
        parser.print_help()
        return 2
    try:
        spec = FigureSpec(input_csv=args.input_csv, kind=args.kind,
                          output=args.output)
        info = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    notes = ", ".join(f"{k}={v:.4g}" for k, v in sorted(info.annotations.items()))
    print(f"wrote {info.output} ({info.n_rows} rows; {notes})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
