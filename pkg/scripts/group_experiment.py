"""Peer-group composition study: who should average with whom?

Ranks vehicles by local-baseline MAE into good (G) and weak (W) performers,
then runs one decentralized experiment per composition (all-weak through
all-good) and prints each group member's outcome against its baseline.
"""

import argparse

from fedfleet.battery import generate_fleet
from fedfleet.federated import RoundPlan
from fedfleet.nn import ArchSpec, TrainConfig
from fedfleet.pipeline import prepare_vehicle
from fedfleet.topology import (
    FleetSpec,
    GroupSpec,
    compose_mixed_group,
    run_centralized,
    run_decentralized,
    select_performers,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--vehicles", type=int, default=10)
    ap.add_argument("--duration", type=int, default=1800)
    ap.add_argument("--arch", default="lstm", choices=("ann", "gru", "lstm"))
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--group-size", type=int, default=3)
    ap.add_argument("--baseline-epochs", type=int, default=10)
    args = ap.parse_args()

    records = generate_fleet(args.seed, args.vehicles, duration=args.duration)
    fleet = FleetSpec(vehicles=tuple(prepare_vehicle(r, m=60) for r in records))
    arch = ArchSpec(kind=args.arch, window=60)
    plan = RoundPlan(algorithm="avg", epochs=2, batch=70)
    baseline_cfg = TrainConfig(batch=70, epochs=args.baseline_epochs)

    # rank via a baseline-only pass, then reuse its numbers for every mix
    ranking = run_centralized(fleet, arch, plan, rounds=0, seed=args.seed,
                              baseline_cfg=baseline_cfg)
    g_ranked, w_ranked = select_performers(ranking.baseline_test, args.group_size)
    print("good performers:", ", ".join(g_ranked))
    print("weak performers:", ", ".join(w_ranked))

    size = args.group_size
    for n_g in range(0, size + 1):
        n_w = size - n_g
        members = compose_mixed_group(g_ranked, w_ranked, n_g, n_w)
        labels = {v: ("G" if v in g_ranked[:n_g] else "W") for v in members}
        groups = GroupSpec(groups=(members,), labels=labels)
        rep = run_decentralized(fleet, groups, arch, plan, args.rounds,
                                seed=args.seed, baseline_cfg=baseline_cfg)
        print(f"\nmix {n_g}G+{n_w}W: {', '.join(members)}")
        for vid in sorted(members):
            b, s = rep.baseline_test[vid], rep.selected_test[vid]
            verdict = "improved" if s < b else "worse"
            print(f"  {vid} [{labels[vid]}]: baseline {b:8.3f} -> group {s:8.3f}  ({verdict})")


if __name__ == "__main__":
    main()
