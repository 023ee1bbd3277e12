"""Command line: peakopt-plot --kind {timeseries,snapshots,history} --in DIR --out FILE."""

import argparse
import sys

from .figures import plot_history, plot_snapshots, plot_timeseries
from .reading import SchemaError

_KINDS = {
    "timeseries": plot_timeseries,
    "snapshots": plot_snapshots,
    "history": plot_history,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="peakopt-plot",
        description="Render figures from a peakopt result directory",
    )
    parser.add_argument("--kind", choices=sorted(_KINDS), required=True)
    parser.add_argument("--in", dest="run_dir", required=True,
                        help="result directory of a solve run")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image file (png/pdf/svg)")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    try:
        path = _KINDS[args.kind](args.run_dir, args.out_path, dpi=args.dpi)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
