"""Acceptance gate: ten criteria, one verdict line each.

Run with `pytest tests/test_acceptance.py -s` to see the verdict lines as
they complete. The last three criteria train at realistic scale and together
take tens of minutes; everything else finishes in seconds.
"""

import json
import math
import os
import time

import numpy as np

from fedfleet.battery import (
    BatteryCellState,
    BatteryParams,
    PiecewiseLinear,
    generate_drive_cycle,
    generate_fleet,
    simulate_trip,
    step_cell,
    VehicleParams,
)
from fedfleet.cli import main as cli_main
from fedfleet.federated import (
    RoundPlan,
    fedavg_round,
    fedper_round,
    fedprox_round,
    fedrep_round,
    make_partition,
    weighted_average,
)
from fedfleet.nn import (
    ArchSpec,
    TrainConfig,
    batch_gradient,
    finite_diff_gradient,
    init_model,
    train_local,
)
from fedfleet.pipeline import (
    SplitSpec,
    chronological_split,
    engineer_features,
    fit_standardizer,
    make_windows,
    prepare_vehicle,
)
from fedfleet.reporting import deterministic_bytes
from fedfleet.seeding import derive_seed, make_rng
from fedfleet.topology import FleetSpec, client_seed_root, run_centralized, run_decentralized

SEED = 42


def _verdict(n: int, desc: str, ok: bool, detail: str = ""):
    tail = f" [{detail}]" if detail else ""
    print(f"criterion {n:02d} {'PASS' if ok else 'FAIL'}: {desc}{tail}", flush=True)
    assert ok, f"criterion {n:02d} failed: {desc}{tail}"


def _trip_1800():
    cycle = generate_drive_cycle(derive_seed(SEED, "vehicle", 1, "cycle"), 1800)
    return simulate_trip(cycle, VehicleParams(), BatteryParams(), 0.9, vehicle_id="v01")


def _mini_fleet(n=3, duration=300):
    records = generate_fleet(SEED, n, duration=duration)
    return FleetSpec(vehicles=tuple(prepare_vehicle(r, m=60) for r in records))


# ---------------------------------------------------------------------------


def test_criterion_01_window_count_identity():
    rec = _trip_1800()
    feats = engineer_features(rec)
    ds = make_windows(feats, rec.energy_wh, m=60, stride=1)
    ok = len(ds) == 1741 and len(rec.time) == 1800
    _verdict(1, "1800-sample trip, m=60, stride 1 -> 1741 windows", ok, f"got {len(ds)}")


def test_criterion_02_gradient_correctness():
    worst = {}
    rng = np.random.default_rng(0)
    for kind in ("ann", "gru", "lstm"):
        arch = ArchSpec(kind=kind, window=5, hidden=(3, 3, 3), dropout=(0.0, 0.0))
        w, _ = init_model(arch, derive_seed(SEED, kind))
        X = rng.normal(size=(4, 5, 5))
        y = rng.normal(size=4)
        _, analytic = batch_gradient(w, arch, X, y, mode="eval")
        coords = rng.choice(len(w), size=24, replace=False)
        numeric = finite_diff_gradient(w, arch, X, y, h=1e-5, coords=coords)
        rel = np.abs(analytic[coords] - numeric) / np.maximum(
            np.abs(numeric), np.abs(analytic[coords]).clip(min=1e-8)
        )
        worst[kind] = float(rel.max())
    ok = all(v < 1e-4 for v in worst.values())
    detail = " ".join(f"{k}={v:.2e}" for k, v in worst.items())
    _verdict(2, "BPTT matches central differences, rel err < 1e-4", ok, detail)


def test_criterion_03_algorithm_equivalences():
    fleet = _mini_fleet()
    arch = ArchSpec(kind="lstm", window=60, hidden=(8, 6), dropout=(0.1,))
    plan = RoundPlan(algorithm="avg", epochs=1, batch=70)
    checks = {}

    # prox(mu=0) vs avg, same broadcast and round index
    w0, _ = init_model(arch, derive_seed(SEED, "init"))
    from fedfleet.federated import ClientState

    def build_clients():
        return [
            ClientState(client_id=v.vehicle_id, data=v, params=w0.copy(),
                        seed_root=client_seed_root(SEED, v))
            for v in fleet.vehicles
        ]

    plan1 = RoundPlan(algorithm="avg", epochs=1, batch=70, round_index=1)
    plan_prox = RoundPlan(algorithm="prox", epochs=1, batch=70, mu=0.0, round_index=1)
    wa = fedavg_round(w0, arch, build_clients(), plan1, make_rng(SEED, "part"))
    wp = fedprox_round(w0, arch, build_clients(), plan_prox, make_rng(SEED, "part"))
    checks["prox_mu0==avg"] = wa.tobytes() == wp.tobytes()

    # single-client round vs plain local training with the matching seed
    solo = build_clients()[:1]
    ws = fedavg_round(w0, arch, solo, plan1, make_rng(SEED, "part"))
    cfg = TrainConfig(batch=70, epochs=1,
                      seed=derive_seed(solo[0].seed_root, "round", 1, "local"))
    wl = train_local(w0, arch, solo[0].data.train, cfg)
    checks["single_client==train_local"] = ws.tobytes() == wl.tobytes()

    # per/rep with nothing personal collapse to avg
    split = make_partition(arch, "per", "none")
    for fn, name in ((fedper_round, "per_empty==avg"), (fedrep_round, "rep_empty==avg")):
        cs = build_clients()
        fn(arch, cs, split, plan1)
        checks[name] = all(c.params.tobytes() == wa.tobytes() for c in cs)

    # one all-client peer group vs the central server
    kw = dict(arch=arch, plan=plan, rounds=2, seed=SEED,
              baseline_cfg=TrainConfig(batch=70, epochs=1))
    cen = run_centralized(fleet, **kw)
    from fedfleet.topology import GroupSpec

    dec = run_decentralized(fleet, GroupSpec(groups=(tuple(fleet.ids()),)), **kw)
    checks["single_group==centralized"] = all(
        cen.final_params[v].tobytes() == dec.final_params[v].tobytes()
        for v in cen.client_ids
    ) and cen.round_test == dec.round_test

    ok = all(checks.values())
    detail = " ".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in checks.items())
    _verdict(3, "bitwise algorithm equivalences under shared seeds", ok, detail)


def test_criterion_04_aggregation_algebra():
    exact = weighted_average([(np.array([1.0, 1.0]), 1), (np.array([5.0, 5.0]), 3)])
    c1 = exact.tolist() == [4.0, 4.0]

    rng = np.random.default_rng(1)
    c2 = True
    for counts in ([1, 2, 3], [7, 7], [5, 1, 1, 1], [70]):
        w = np.array([n / sum(counts) for n in counts])
        c2 &= abs(float(w.sum()) - 1.0) <= 1e-15

    entries = [(rng.normal(size=37), int(n)) for n in rng.integers(1, 9, size=6)]
    base = weighted_average(entries)
    c3 = True
    for _ in range(10):
        perm = list(rng.permutation(len(entries)))
        c3 &= weighted_average([entries[i] for i in perm]).tobytes() == base.tobytes()

    ok = c1 and c2 and c3
    _verdict(4, "weighted average: exact value, unit weights, bitwise permutation invariance",
             ok, f"[4,4]={c1} sum1={c2} perm={c3}")


def test_criterion_05_personalization_contract():
    fleet = _mini_fleet()
    arch = ArchSpec(kind="gru", window=60, hidden=(8, 6), dropout=(0.1,))
    w0, part = init_model(arch, derive_seed(SEED, "init"))
    from fedfleet.federated import ClientState, extract_segments

    results = {}
    for algorithm, fn in (("per", fedper_round), ("rep", fedrep_round)):
        split = make_partition(arch, algorithm)
        clients = [
            ClientState(client_id=v.vehicle_id, data=v, params=w0.copy(),
                        seed_root=client_seed_root(SEED, v))
            for v in fleet.vehicles
        ]
        plan = RoundPlan(algorithm=algorithm, epochs=1, batch=70, round_index=1)
        # recompute each client's local result independently
        locals_ = {}
        for c in clients:
            cfg = TrainConfig(batch=70, epochs=1,
                              seed=derive_seed(c.seed_root, "round", 1, "local"))
            locals_[c.client_id] = train_local(w0, arch, c.data.train, cfg)
        shared_avg = fn(arch, clients, split, plan)
        expect_avg = weighted_average([
            (extract_segments(locals_[c.client_id], part, split.shared), c.n_train)
            for c in sorted(clients, key=lambda c: c.client_id)
        ])
        ok_personal = all(
            extract_segments(c.params, part, split.personal).tobytes()
            == extract_segments(locals_[c.client_id], part, split.personal).tobytes()
            for c in clients
        )
        ok_shared = shared_avg.tobytes() == expect_avg.tobytes() and all(
            extract_segments(c.params, part, split.shared).tobytes() == expect_avg.tobytes()
            for c in clients
        )
        results[algorithm] = ok_personal and ok_shared
    ok = all(results.values())
    _verdict(5, "per/rep: personal segments untouched by the server, shared = weighted average",
             ok, " ".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in results.items()))


def test_criterion_06_battery_oracles():
    p = BatteryParams()
    rp1, cp1 = float(p.rp1_table(0.9)), float(p.cp1_table(0.9))
    rc = rp1 * cp1
    current = 50.0
    state = BatteryCellState(soc=0.9, v_p1=0.0, j_cell=0.0, clamp_events=0)
    worst_v = 0.0
    for k in range(1, 121):
        state, _ = step_cell(state, p, current, 1.0)
        closed = current * rp1 * (1.0 - math.exp(-k / rc))
        worst_v = max(worst_v, abs(state.v_p1 - closed))
    c_rc = worst_v < 0.01

    flat = BatteryParams(
        r0_table=PiecewiseLinear((0.0, 1.0), (0.0, 0.0)),
        voc_table=PiecewiseLinear((0.0, 1.0), (3.7, 3.7)),
    )
    state = BatteryCellState(soc=0.5, v_p1=0.0, j_cell=0.0, clamp_events=0)
    t, i_bc = 200, 10.0
    for _ in range(t):
        state, _ = step_cell(state, flat, i_bc, 1.0)
    expect = 3.7 * i_bc * t
    c_flat = abs(state.j_cell - expect) / expect < 1e-9

    rec = _trip_1800()
    total_j = rec.extras["cell_energy_j"][-1]
    expect_wh = BatteryParams().n_bc * total_j / 3600.0
    got_wh = float(np.sum(rec.energy_wh))
    c_sum = abs(got_wh - expect_wh) / abs(expect_wh) < 1e-9

    ok = c_rc and c_flat and c_sum
    _verdict(6, "RC closed form, flat-Voc energy identity, per-second column sum",
             ok, f"rc_dev={worst_v:.2e}V flat={c_flat} colsum={c_sum}")


def test_criterion_07_pipeline_statistics():
    rec = _trip_1800()
    feats = engineer_features(rec)
    ds = make_windows(feats, rec.energy_wh, m=60)
    train, val, test = chronological_split(ds, SplitSpec(8, 1, 1))
    sizes_ok = (len(train), len(val), len(test)) == (1392, 174, 175)

    stdzr = fit_standardizer(train)
    flat = train.X.reshape(-1, train.X.shape[2])
    z = (flat - stdzr.mean) / stdzr.std
    nonconst = flat.std(axis=0) > 1e-12
    mean_ok = bool(np.all(np.abs(z.mean(axis=0))[nonconst] < 1e-9))
    std_ok = bool(np.all(np.abs(z.std(axis=0) - 1.0)[nonconst] < 1e-9))

    ok = sizes_ok and mean_ok and std_ok
    _verdict(7, "standardizer unit stats and 1392/174/175 split of 1741",
             ok, f"sizes={(len(train), len(val), len(test))} mean={mean_ok} std={std_ok}")


def test_criterion_08_directional_federated_gain():
    t0 = time.perf_counter()
    records = generate_fleet(SEED, 10, duration=1800)
    fleet = FleetSpec(vehicles=tuple(prepare_vehicle(r, m=60) for r in records))
    arch = ArchSpec(kind="lstm", window=60)
    plan = RoundPlan(algorithm="avg", epochs=2, batch=70)
    rep = run_centralized(
        fleet, arch, plan, rounds=15, seed=SEED,
        baseline_cfg=TrainConfig(batch=70, epochs=10), report_select="final",
    )
    minutes = (time.perf_counter() - t0) / 60.0
    improved = sum(
        1 for v in rep.client_ids if rep.selected_test[v] < rep.baseline_test[v]
    )
    ok = improved >= 7 and minutes <= 30.0
    _verdict(8, "FedAvg-LSTM (15 rounds, E=2, B=70) beats local E=10 for >= 7/10 vehicles",
             ok, f"improved={improved}/10 wall={minutes:.1f}min")


def test_criterion_09_cmd_run_byte_identical(tmp_path):
    t0 = time.perf_counter()
    out = str(tmp_path / "det")
    argv = [
        "run", "--seed", "11", "--data-fleet-size", "3", "--data-duration", "600",
        "--rounds", "2", "--local-epochs", "1", "--baseline-epochs", "1",
        "--out-dir", out,
    ]
    first_rc = cli_main(list(argv))
    first = deterministic_bytes(out)
    second_rc = cli_main(list(argv))
    second = deterministic_bytes(out)
    minutes = (time.perf_counter() - t0) / 60.0
    ok = first_rc == 0 and second_rc == 0 and first == second and len(first) >= 5
    _verdict(9, "two identical cmd_run executions produce byte-identical reports",
             ok, f"files={len(first)} wall={minutes:.1f}min")


def test_criterion_10_window_sweep(tmp_path):
    t0 = time.perf_counter()
    out = str(tmp_path / "sweep")
    rc = cli_main([
        "sweep", "--axis", "window", "--seed", str(SEED),
        "--rounds", "1", "--local-epochs", "1", "--baseline-epochs", "1",
        "--out-dir", out,
    ])
    counts = []
    for m in (60, 90, 120, 150, 180):
        with open(os.path.join(out, f"window-{m}", "report.json")) as fh:
            d = json.load(fh)
        totals = {sum(s) for s in d["split_sizes"].values()}
        counts.append(totals.pop() if len(totals) == 1 else -1)
    minutes = (time.perf_counter() - t0) / 60.0
    decreasing = all(a > b for a, b in zip(counts, counts[1:]))
    ok = rc == 0 and counts == [1741, 1711, 1681, 1651, 1621] and decreasing and minutes < 60.0
    _verdict(10, "window sweep counts 1741..1621 strictly decreasing, finished in budget",
             ok, f"counts={counts} wall={minutes:.1f}min")
