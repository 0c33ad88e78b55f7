"""fvdsim-plot: regenerate figures from simulator output directories."""

import argparse
import sys

from .figures import RENDERERS, render
from .io import PlotInputError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fvdsim-plot",
        description="Render publication-style figures from fvdsim CSV/JSON outputs")
    parser.add_argument("kind", choices=sorted(RENDERERS),
                        help="figure kind to render")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding the simulator outputs")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path (.svg or .pdf)")
    parser.add_argument("--deterministic", action="store_true",
                        help="suppress the embedded timestamp for byte-stable SVGs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        render(args.kind, args.in_dir, args.out_path,
               deterministic=args.deterministic)
    except PlotInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
