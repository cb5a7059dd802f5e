"""plotviz command line: figures from benchmark CSV traces.

    plotviz --in 'results/*.csv' --x work_units --out fig1.png

Repeat --x to emit one figure per axis (the axis name is appended to the
output stem when more than one is requested).
"""

from __future__ import annotations

import argparse
import sys

from .render import X_AXES, EmptyInput, PlotSpec, SchemaMismatch, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plotviz",
                                description="Convergence figures from lazynewton "
                                            "benchmark CSVs.")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   metavar="GLOB", help="input CSV glob; repeatable")
    p.add_argument("--x", dest="x_axes", action="append", choices=X_AXES,
                   help="x axis; repeatable (default: work_units)")
    p.add_argument("--out", default="fig.png", help="output image path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(inputs=args.inputs, x_axes=args.x_axes or ["work_units"],
                    out=args.out)
    try:
        written = render(spec)
    except (EmptyInput, SchemaMismatch) as exc:
        print(f"plotviz: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
