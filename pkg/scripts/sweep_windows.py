"""Window-length sweep: label horizon vs prediction difficulty.

Thin wrapper over `fedfleet sweep --axis window`. Longer windows mean fewer
(and harder) samples; sweep_meta.csv records the per-vehicle window counts.
"""

import argparse
import sys

from fedfleet.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="runs/sweep-windows")
    ap.add_argument("--values", default="60,90,120,150,180")
    args, extra = ap.parse_known_args()
    extra = [a for a in extra if a != "--"]

    argv = ["sweep", "--axis", "window", "--values", args.values, "--out-dir", args.out]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv + extra)


if __name__ == "__main__":
    sys.exit(main())
