"""Round-budget sweep: how much do extra aggregation rounds buy?

Thin wrapper over `fedfleet sweep --axis rounds`; see sweep.csv in the
output directory for the combined table.
"""

import argparse
import sys

from fedfleet.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="runs/sweep-rounds")
    ap.add_argument("--values", default="15,30,45,60")
    args, extra = ap.parse_known_args()
    extra = [a for a in extra if a != "--"]

    argv = ["sweep", "--axis", "rounds", "--values", args.values, "--out-dir", args.out]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv + extra)


if __name__ == "__main__":
    sys.exit(main())
