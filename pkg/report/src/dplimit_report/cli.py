"""Report CLI: dplimit-report --in RUNS_DIR --out FIGURES_DIR.

Discovers sweep.csv / steps.csv / audit.csv under the input directory and
renders every figure whose input is present.  Exits 2 on schema violations
(naming the offending column), 0 on success.
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import FIGURE_BUILDERS, ReportSpec, SchemaError, make_figures


def discover_inputs(in_dir: str) -> dict:
    found = {}
    for schema in ("sweep", "steps", "audit"):
        path = os.path.join(in_dir, f"{schema}.csv")
        if os.path.exists(path):
            found[schema] = path
    return found


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dplimit-report",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding sweep.csv / steps.csv / audit.csv")
    parser.add_argument("--out", dest="out_dir", required=True)
    parser.add_argument("--figures", default=",".join(sorted(FIGURE_BUILDERS)),
                        help="comma-separated figure kinds")
    parser.add_argument("--format", default="png", choices=["png"])
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 2)
    try:
        inputs = discover_inputs(args.in_dir)
        spec = ReportSpec(
            inputs=inputs, out_dir=args.out_dir,
            figures=tuple(k for k in args.figures.split(",") if k),
            image_format=args.format)
        written = make_figures(spec)
    except (SchemaError, FileNotFoundError) as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
