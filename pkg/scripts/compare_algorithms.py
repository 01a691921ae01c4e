"""All five federated algorithms on one fleet, side by side.

Each algorithm gets the same fleet, seed, and round budget; the table shows
per-vehicle test MAE of the reported model next to the local baseline.
"""

import argparse

from fedfleet.battery import generate_fleet
from fedfleet.federated import ALGORITHMS, RoundPlan
from fedfleet.nn import ArchSpec, TrainConfig
from fedfleet.pipeline import prepare_vehicle
from fedfleet.topology import FleetSpec, run_centralized


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--vehicles", type=int, default=5)
    ap.add_argument("--duration", type=int, default=1800)
    ap.add_argument("--arch", default="lstm", choices=("ann", "gru", "lstm"))
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=2, help="local epochs per round")
    ap.add_argument("--baseline-epochs", type=int, default=10)
    ap.add_argument("--mu", type=float, default=0.01, help="proximal pull for prox")
    args = ap.parse_args()

    records = generate_fleet(args.seed, args.vehicles, duration=args.duration)
    fleet = FleetSpec(vehicles=tuple(prepare_vehicle(r, m=60) for r in records))
    arch = ArchSpec(kind=args.arch, window=60)
    baseline_cfg = TrainConfig(batch=70, epochs=args.baseline_epochs)

    columns = {}
    baseline = None
    for algorithm in ALGORITHMS:
        mu = args.mu if algorithm == "prox" else 0.0
        plan = RoundPlan(algorithm=algorithm, epochs=args.epochs, batch=70, mu=mu)
        rep = run_centralized(fleet, arch, plan, args.rounds, seed=args.seed,
                              baseline_cfg=baseline_cfg)
        columns[algorithm] = rep.selected_test
        baseline = rep.baseline_test  # identical across algorithms by construction

    print(f"test MAE (Wh), {args.rounds} rounds of {args.arch}")
    print("vehicle  " + f"{'local':>8}  " + "  ".join(f"{a:>8}" for a in ALGORITHMS))
    for vid in sorted(baseline):
        cells = "  ".join(f"{columns[a][vid]:8.3f}" for a in ALGORITHMS)
        print(f"{vid:7}  {baseline[vid]:8.3f}  {cells}")


if __name__ == "__main__":
    main()
