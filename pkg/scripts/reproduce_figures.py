#!/usr/bin/env python3
"""Reproduce all five reference splitting diagrams as CSV + summaries.

Writes figure<N>.csv and figure<N>_summary.json into the output directory
and prints a one-line digest per figure.  Positive and negative epsilon
branches (the (a)/(b) panels) go into separate subdirectories.
"""

import argparse
import json
from pathlib import Path

from critmode.cli import main as cli_main


def run(out_dir: Path, eps0: float) -> None:
    for fig in range(1, 6):
        for sign, tag in ((1.0, "pos"), (-1.0, "neg")):
            out = out_dir / f"{tag}"
            code = cli_main(
                [
                    "reproduce-figure",
                    "--figure", str(fig),
                    "--eps0", repr(sign * eps0),
                    "--out", str(out),
                ]
            )
            if code != 0:
                raise SystemExit(code)
            summary = json.loads(
                (out / f"figure{fig}_summary.json").read_text()
            )
            line = (
                f"figure {fig} ({tag}): exponent {summary['exponent']:+.4f}"
                f"  error slope {summary['first_order_error_slope']:.3f}"
                f"  equiangular offset {summary['equiangular_worst_offset']:.2e}"
            )
            if "static_mode_slope" in summary:
                line += f"  static slope {summary['static_mode_slope']:.3f}"
            print(line)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="figures-out")
    parser.add_argument("--eps0", type=float, default=1e-4)
    args = parser.parse_args()
    run(Path(args.out), args.eps0)
