"""traceviz: regenerate figures from aggregate trace CSVs.

    traceviz --csv results/run_aggregate.csv --kind dynamics --out fig.svg
"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="traceviz", description=__doc__)
    p.add_argument("--csv", action="append", required=True, dest="csvs",
                   help="Aggregate CSV path (repeat for comparison figures).")
    p.add_argument("--kind", choices=["dynamics", "unfairness", "comparison"],
                   default="dynamics")
    p.add_argument("--out", required=True, help="Output SVG path.")
    p.add_argument("--groups", default=None,
                   help="Comma-separated group ids to draw (default: all).")
    p.add_argument("--error-bars", choices=["stderr", "std", "none"],
                   default="stderr")
    p.add_argument("--title", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        csv_paths=args.csvs,
        kind=args.kind,
        out_path=args.out,
        groups=args.groups.split(",") if args.groups else None,
        error_bars=args.error_bars,
        title=args.title,
    )
    try:
        out = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
