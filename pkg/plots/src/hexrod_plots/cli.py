"""Command-line wrapper: hexrod-plot <kind> --in FILE --out FILE.png"""

from __future__ import annotations

import argparse
import json
import sys

from .figures import PLOT_KINDS, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexrod-plot",
        description="Render figures from hexrod experiment CSV files.")
    parser.add_argument("kind", choices=sorted(PLOT_KINDS),
                        help="figure kind to render")
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV file")
    parser.add_argument("--out", dest="output", required=True,
                        help="output image path (format from extension)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.input, args.output)
    except SchemaError as err:
        print(json.dumps({"error": "schema", "message": str(err)}),
              file=sys.stderr)
        return 1
    except OSError as err:
        print(json.dumps({"error": "io", "message": str(err)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
