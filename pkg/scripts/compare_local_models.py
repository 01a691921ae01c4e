"""Local-only baselines across the three model families.

Trains one model per vehicle per architecture (no federation) and prints the
per-vehicle test MAE table. Desk-scale defaults; raise --duration and
--epochs to approach report quality.
"""

import argparse

from fedfleet.battery import generate_fleet
from fedfleet.nn import ArchSpec, TrainConfig, evaluate, init_model, train_local
from fedfleet.pipeline import prepare_vehicle
from fedfleet.seeding import derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--vehicles", type=int, default=5)
    ap.add_argument("--duration", type=int, default=1800)
    ap.add_argument("--window", type=int, default=60)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--batch", type=int, default=70)
    args = ap.parse_args()

    records = generate_fleet(args.seed, args.vehicles, duration=args.duration)
    fleet = [prepare_vehicle(r, m=args.window) for r in records]
    kinds = ("ann", "gru", "lstm")

    results = {}
    for kind in kinds:
        arch = ArchSpec(kind=kind, window=args.window)
        w0, _ = init_model(arch, derive_seed(args.seed, "init"))
        for v in fleet:
            cfg = TrainConfig(
                batch=args.batch, epochs=args.epochs,
                seed=derive_seed(args.seed, "local", v.vehicle_id, kind),
            )
            w = train_local(w0, arch, v.train, cfg)
            results[(v.vehicle_id, kind)] = evaluate(w, arch, v.test)

    print(f"test MAE (Wh) after {args.epochs} local epochs")
    print("vehicle  " + "  ".join(f"{k:>8}" for k in kinds))
    for v in fleet:
        row = "  ".join(f"{results[(v.vehicle_id, k)]:8.3f}" for k in kinds)
        print(f"{v.vehicle_id:7}  {row}")
    for k in kinds:
        mean = sum(results[(v.vehicle_id, k)] for v in fleet) / len(fleet)
        print(f"mean {k}: {mean:.3f}")


if __name__ == "__main__":
    main()
