"""Train/val/test ratio sweep over the chronological split.

Thin wrapper over `fedfleet sweep --axis split`. Window totals stay fixed
per vehicle; only the partition boundaries move.
"""

import argparse
import sys

from fedfleet.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="runs/sweep-splits")
    ap.add_argument("--values", default="4:1:5,5:1:4,6:1:3,8:1:1")
    args, extra = ap.parse_known_args()
    extra = [a for a in extra if a != "--"]

    argv = ["sweep", "--axis", "split", "--values", args.values, "--out-dir", args.out]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv + extra)


if __name__ == "__main__":
    sys.exit(main())
