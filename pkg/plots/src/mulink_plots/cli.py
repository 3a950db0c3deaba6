"""render-figures: turn simulator CSV directories into SVG and PNG figures."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import InputError
from .render import render
from .spec import preset_names, spec_for


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render-figures",
        description="Render figures from simulation CSV output, one SVG and "
                    "one PNG per preset.")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="directory holding <preset>.csv files")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for the rendered images")
    parser.add_argument("--preset", default=None,
                        help="render a single preset "
                             f"(known: {', '.join(preset_names())})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    in_dir = Path(args.in_dir)
    if args.preset is not None:
        if args.preset not in preset_names():
            print(f"render error: unknown preset {args.preset!r} "
                  f"(known: {', '.join(preset_names())})", file=sys.stderr)
            return 2
        names = [args.preset]
    else:
        names = [n for n in preset_names() if (in_dir / f"{n}.csv").exists()]
        if not names:
            print(f"render error: no <preset>.csv files in {in_dir}",
                  file=sys.stderr)
            return 2
    try:
        for name in names:
            svg, png = render(spec_for(name, in_dir, args.out_dir))
            print(f"wrote {svg} and {png}")
    except InputError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
